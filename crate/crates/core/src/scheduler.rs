//! Laser-frequency schedules: greedy construction by short look-ahead
//! simulations, Stokes-safety validation and the schedule file format.

use std::fmt::Write as _;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::combspec::{find_resonances, laser_for_line, solve_finetune};
use crate::dynamics::{build_rate_matrix, ground_population, mean_j, propagator, DynError, LaserSetting, Model};
use crate::molstruct::LineKind;
use crate::units;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedError {
    #[error("epoch must be positive, got {0}")]
    Epoch(f64),
    #[error("horizon must be non-negative, got {0}")]
    Horizon(f64),
    #[error("schedule file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Dynamics(#[from] DynError),
}

/// One constant laser setting held for `duration` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSegment {
    pub laser_hz: f64,
    pub finetune_hz: f64,
    pub duration: f64,
    /// Labels of the addressed lines.
    pub lines: Vec<String>,
}

impl ScheduleSegment {
    pub fn new(setting: LaserSetting, duration: f64, lines: Vec<String>) -> Self {
        Self {
            laser_hz: units::rad_s_to_hz(setting.laser),
            finetune_hz: units::rad_s_to_hz(setting.finetune),
            duration,
            lines,
        }
    }

    pub fn setting(&self) -> LaserSetting {
        LaserSetting {
            laser: units::hz_to_rad_s(self.laser_hz),
            finetune: units::hz_to_rad_s(self.finetune_hz),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    pub segments: Vec<ScheduleSegment>,
    /// Why construction stopped.
    pub diagnostic: String,
}

impl Schedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_start_s,duration_s,laser_hz,finetune_hz,lines\n");
        let mut t = 0.0;
        for seg in &self.segments {
            writeln!(
                s,
                "{},{},{},{},{}",
                t,
                seg.duration,
                seg.laser_hz,
                seg.finetune_hz,
                seg.lines.join(";")
            )
            .expect("writing to a String");
            t += seg.duration;
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(self.to_csv().as_bytes())
    }

    pub fn from_csv(text: &str) -> Result<Self, SchedError> {
        let mut segments = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || (n == 0 && line.starts_with("t_start_s")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(SchedError::Parse {
                    line: n + 1,
                    msg: format!("expected 5 fields, found {}", fields.len()),
                });
            }
            let num = |i: usize, name: &str| -> Result<f64, SchedError> {
                fields[i].trim().parse::<f64>().map_err(|_| SchedError::Parse {
                    line: n + 1,
                    msg: format!("{name}: cannot parse {:?}", fields[i]),
                })
            };
            let duration = num(1, "duration_s")?;
            if !(duration > 0.0) {
                return Err(SchedError::Parse {
                    line: n + 1,
                    msg: format!("duration must be positive, got {duration}"),
                });
            }
            segments.push(ScheduleSegment {
                laser_hz: num(2, "laser_hz")?,
                finetune_hz: num(3, "finetune_hz")?,
                duration,
                lines: fields[4]
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
            });
        }
        Ok(Self {
            segments,
            diagnostic: String::new(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyOptions {
    pub epoch: f64,
    pub horizon: f64,
    /// Stop once P(J=0) + P(J=1) reaches this.
    pub target_ground: f64,
    /// Number of epochs simulated ahead when scoring a setting.
    pub lookahead: usize,
    /// Largest |fine-tune| tried for dual-line settings (rad/s).
    pub finetune_window: f64,
    /// Resonance tolerance (rad/s).
    pub tolerance: f64,
    /// Translational temperature used for the Doppler terms.
    pub t_tr: f64,
}

/// A laser setting the greedy search may choose.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub setting: LaserSetting,
    /// Indices of the targeted anti-Stokes lines.
    pub lines: Vec<usize>,
    /// Lowest initial J among the targeted lines.
    pub target_j: u32,
}

/// Every single-line and feasible dual-line setting free of resonant Stokes
/// lines, ordered by target J.
pub fn candidates(model: &Model, window: f64, tolerance: f64) -> Vec<Candidate> {
    let anti: Vec<usize> = (0..model.lines.len())
        .filter(|&i| model.lines[i].kind == LineKind::AntiStokes)
        .collect();
    let j_of = |i: usize| model.levels.get(model.lines[i].from).j;
    let mut out = Vec::new();
    for &a in &anti {
        out.push(Candidate {
            setting: LaserSetting {
                laser: laser_for_line(&model.cavity.with_finetune(0.0), model.lines[a].shift),
                finetune: 0.0,
            },
            lines: vec![a],
            target_j: j_of(a),
        });
    }
    for (x, &a) in anti.iter().enumerate() {
        for &b in &anti[x + 1..] {
            let sol = solve_finetune(
                model.lines[a].shift,
                model.lines[b].shift,
                &model.cavity,
                window,
                tolerance,
            );
            if sol.feasible {
                out.push(Candidate {
                    setting: LaserSetting {
                        laser: sol.laser,
                        finetune: sol.finetune,
                    },
                    lines: vec![a, b],
                    target_j: j_of(a).min(j_of(b)),
                });
            }
        }
    }
    out.retain(|c| {
        let cav = model.cavity.with_finetune(c.setting.finetune);
        !find_resonances(&model.lines, &cav, c.setting.laser, tolerance)
            .iter()
            .any(|m| m.is_stokes_hazard())
    });
    // stable: singles before pairs at equal target J
    out.sort_by_key(|c| c.target_j);
    out
}

fn labels(model: &Model, lines: &[usize]) -> Vec<String> {
    lines.iter().map(|&i| model.lines[i].label(&model.levels)).collect()
}

/// Smallest ⟨J⟩ reachable from `p` in `depth` further epochs.
fn best_future(props: &[DMatrix<f64>], p: &DVector<f64>, depth: usize, model: &Model) -> f64 {
    if depth == 0 {
        return mean_j(p, &model.levels);
    }
    props
        .iter()
        .map(|u| best_future(props, &(u * p), depth - 1, model))
        .fold(f64::INFINITY, f64::min)
}

/// Builds a schedule epoch by epoch, each time choosing the setting whose
/// look-ahead simulation ends with the lowest ⟨J⟩.
pub fn greedy_schedule(model: &Model, p0: &DVector<f64>, opts: &GreedyOptions) -> Result<Schedule, SchedError> {
    if !(opts.epoch > 0.0) {
        return Err(SchedError::Epoch(opts.epoch));
    }
    if !(opts.horizon >= 0.0) {
        return Err(SchedError::Horizon(opts.horizon));
    }
    let cands = candidates(model, opts.finetune_window, opts.tolerance);
    let gens: Vec<DMatrix<f64>> = cands
        .iter()
        .map(|c| build_rate_matrix(model, c.setting, opts.t_tr).w)
        .collect();
    let props = gens
        .iter()
        .map(|w| propagator(w, opts.epoch, model.dt_max))
        .collect::<Result<Vec<_>, _>>()?;

    let mut p = p0.clone();
    let mut t = 0.0;
    let mut segments: Vec<ScheduleSegment> = Vec::new();
    let mut last: Option<usize> = None;
    let eps = 1e-9 * opts.epoch;
    let diagnostic = loop {
        if ground_population(&p, &model.levels) >= opts.target_ground {
            break format!("ground-state target {} reached", opts.target_ground);
        }
        let remaining = opts.horizon - t;
        if remaining <= eps {
            break "horizon reached".to_string();
        }
        if cands.is_empty() {
            break "no Stokes-safe anti-Stokes setting exists".to_string();
        }
        let duration = opts.epoch.min(remaining);
        let short;
        let now: &[DMatrix<f64>] = if duration < opts.epoch - eps {
            short = gens
                .iter()
                .map(|w| propagator(w, duration, model.dt_max))
                .collect::<Result<Vec<_>, _>>()?;
            &short
        } else {
            &props
        };
        let depth = opts.lookahead.max(1);
        let later = ((remaining - duration) / opts.epoch).ceil() as usize;
        let ahead = (depth - 1).min(later);
        let mut best: Option<(usize, f64)> = None;
        for (i, u) in now.iter().enumerate() {
            let score = best_future(&props, &(u * &p), ahead, model);
            // first in candidate order wins a tie
            if best.is_none_or(|(_, s)| score < s - 1e-15) {
                best = Some((i, score));
            }
        }
        let (i, _) = best.expect("candidates non-empty");
        let next = &now[i] * &p;
        let before = mean_j(&p, &model.levels);
        if !(before - mean_j(&next, &model.levels) > 0.0) {
            break "no anti-Stokes line with positive population flux".to_string();
        }
        match (last, segments.last_mut()) {
            (Some(j), Some(seg)) if j == i => seg.duration += duration,
            _ => segments.push(ScheduleSegment::new(
                cands[i].setting,
                duration,
                labels(model, &cands[i].lines),
            )),
        }
        last = Some(i);
        p = next;
        t += duration;
    };
    Ok(Schedule { segments, diagnostic })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentCheck {
    pub segment: usize,
    /// Labels of all resonant lines, Rayleigh included.
    pub resonant: Vec<String>,
    pub stokes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<SegmentCheck>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Lists the resonant lines of every segment and fails on any resonant
/// Stokes line.
pub fn validate_schedule(
    schedule: &Schedule,
    model: &Model,
    tolerance: f64,
    max_simultaneous: usize,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (i, seg) in schedule.segments.iter().enumerate() {
        let setting = seg.setting();
        let cav = model.cavity.with_finetune(setting.finetune);
        let matches = find_resonances(&model.lines, &cav, setting.laser, tolerance);
        let label = |l: usize| model.lines[l].label(&model.levels);
        let resonant: Vec<String> = matches.iter().filter(|m| m.resonant).map(|m| label(m.line)).collect();
        let stokes: Vec<String> = matches
            .iter()
            .filter(|m| m.is_stokes_hazard())
            .map(|m| label(m.line))
            .collect();
        for s in &stokes {
            report
                .errors
                .push(format!("segment {i}: Stokes line {s} is resonant"));
        }
        let inelastic = matches
            .iter()
            .filter(|m| m.resonant && m.kind != LineKind::Rayleigh)
            .count();
        if inelastic > max_simultaneous {
            report.warnings.push(format!(
                "segment {i}: {inelastic} simultaneous resonances (limit {max_simultaneous})"
            ));
        }
        report.checks.push(SegmentCheck {
            segment: i,
            resonant,
            stokes,
        });
    }
    report
}

//! Raman lines against the resonator mode comb: folding into one free
//! spectral range, resonance matching, Stokes-coincidence scans and the
//! mode-spacing fine-tune that puts two lines on resonance together.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::molstruct::{LineKind, RamanLine};
use crate::rates::CavitySpec;

/// Nearest comb order and signed residual of a photon at `omega`.
pub fn nearest_tooth(cavity: &CavitySpec, omega: f64) -> (i64, f64) {
    let y = omega - cavity.anchor;
    let spacing = cavity.spacing();
    let n = (y / spacing).round();
    (n as i64, y - n * spacing)
}

/// Photon frequency reduced into [0, spacing) relative to the anchor.
pub fn fold(cavity: &CavitySpec, omega: f64) -> f64 {
    let spacing = cavity.spacing();
    let r = (omega - cavity.anchor).rem_euclid(spacing);
    if r >= spacing {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldedLine {
    /// Index into the line list.
    pub line: usize,
    pub folded: f64,
    pub order: i64,
    pub detuning: f64,
}

/// Scattered-photon frequencies ω_L + shift folded into one FSR, ordered by
/// folded position (ties by line index).
pub fn fold_lines(lines: &[RamanLine], cavity: &CavitySpec, laser: f64) -> Vec<FoldedLine> {
    let mut out: Vec<FoldedLine> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let omega = laser + l.shift;
            let (order, detuning) = nearest_tooth(cavity, omega);
            FoldedLine {
                line: i,
                folded: fold(cavity, omega),
                order,
                detuning,
            }
        })
        .collect();
    out.sort_by(|a, b| a.folded.total_cmp(&b.folded).then(a.line.cmp(&b.line)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceMatch {
    pub line: usize,
    pub detuning: f64,
    pub order: i64,
    pub resonant: bool,
    pub kind: LineKind,
}

impl ResonanceMatch {
    pub fn is_stokes_hazard(&self) -> bool {
        self.resonant && self.kind == LineKind::Stokes
    }
}

/// Detuning of every line from its nearest tooth, in line order.
pub fn find_resonances(
    lines: &[RamanLine],
    cavity: &CavitySpec,
    laser: f64,
    tolerance: f64,
) -> Vec<ResonanceMatch> {
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let (order, detuning) = nearest_tooth(cavity, laser + l.shift);
            ResonanceMatch {
                line: i,
                detuning,
                order,
                resonant: detuning.abs() <= tolerance,
                kind: l.kind,
            }
        })
        .collect()
}

/// Laser frequency closest to the anchor that puts a line of shift `shift`
/// exactly on a tooth of `cavity`.
pub fn laser_for_line(cavity: &CavitySpec, shift: f64) -> f64 {
    let spacing = cavity.spacing();
    let x = (-shift).rem_euclid(spacing);
    let x = if x > 0.5 * spacing { x - spacing } else { x };
    cavity.anchor + x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinetuneSolution {
    pub finetune: f64,
    pub laser: f64,
    /// max(|δω_a|, |δω_b|) at the returned setting.
    pub max_detuning: f64,
    pub feasible: bool,
}

/// Mode-spacing change δ within `±window` and laser frequency that bring
/// the lines with shifts `shift_a` and `shift_b` closest to simultaneous
/// resonance.
///
/// For an integer order difference m the two residuals can be split evenly
/// to ±|Δs − m(FSR+δ)|/2, so the optimum is either an exact zero of that
/// expression or a window edge. Ties go to the smallest |δ|.
pub fn solve_finetune(
    shift_a: f64,
    shift_b: f64,
    cavity: &CavitySpec,
    window: f64,
    tolerance: f64,
) -> FinetuneSolution {
    let base = cavity.with_finetune(0.0);
    let ds = shift_a - shift_b;
    let window = window.abs().min(0.5 * base.fsr);

    let mut candidates = vec![0.0, window, -window];
    if ds != 0.0 {
        let lo = ds.abs() / (base.fsr + window);
        let hi = if window < base.fsr {
            ds.abs() / (base.fsr - window)
        } else {
            f64::INFINITY
        };
        let mut m = lo.floor().max(1.0);
        while m <= hi.ceil() {
            let d = ds.abs() / m - base.fsr;
            if d.abs() <= window {
                candidates.push(d);
            }
            m += 1.0;
        }
    }

    let residual = |d: f64| {
        let sp = base.fsr + d;
        let m = (ds / sp).round();
        (ds - m * sp).abs() / 2.0
    };

    // Residuals this close are the same optimum seen through rounding.
    let tie = 1e-9 * base.fsr;
    let mut best = (f64::INFINITY, f64::INFINITY);
    for &d in &candidates {
        let r = residual(d);
        let better = r < best.0 - tie || (r <= best.0 + tie && d.abs() < best.1.abs());
        if best.0.is_infinite() || better {
            best = (r, d);
        }
    }
    let (_, finetune) = best;
    let cav = base.with_finetune(finetune);
    let sp = cav.spacing();
    let m = (ds / sp).round();
    let split = 0.5 * (ds - m * sp);
    // line a sits at +split, line b at −split
    let x = (split - shift_a).rem_euclid(sp);
    let x = if x > 0.5 * sp { x - sp } else { x };
    let laser = cav.anchor + x;
    let (_, ra) = nearest_tooth(&cav, laser + shift_a);
    let (_, rb) = nearest_tooth(&cav, laser + shift_b);
    let max_detuning = ra.abs().max(rb.abs());
    FinetuneSolution {
        finetune,
        laser,
        max_detuning,
        feasible: max_detuning <= tolerance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidenceStats {
    pub samples: usize,
    /// Stokes lines found within tolerance, summed over all samples.
    pub hits: usize,
    pub stokes_lines: usize,
    /// Uniform-folding estimate N_stokes·2·tolerance/FSR per sample.
    pub expected_per_sample: f64,
}

/// Counts accidental Stokes resonances for laser frequencies drawn uniformly
/// over one spacing above the anchor.
pub fn stokes_coincidence_scan(
    lines: &[RamanLine],
    cavity: &CavitySpec,
    tolerance: f64,
    samples: usize,
    seed: u64,
) -> CoincidenceStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stokes: Vec<f64> = lines
        .iter()
        .filter(|l| l.kind == LineKind::Stokes)
        .map(|l| l.shift)
        .collect();
    let spacing = cavity.spacing();
    let mut hits = 0;
    for _ in 0..samples {
        let laser = cavity.anchor + rng.gen::<f64>() * spacing;
        hits += stokes
            .iter()
            .filter(|&&s| nearest_tooth(cavity, laser + s).1.abs() <= tolerance)
            .count();
    }
    CoincidenceStats {
        samples,
        hits,
        stokes_lines: stokes.len(),
        expected_per_sample: stokes.len() as f64 * 2.0 * tolerance / spacing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::hz_to_rad_s;

    fn comb() -> CavitySpec {
        CavitySpec::new(
            hz_to_rad_s(15e9),
            hz_to_rad_s(75e3),
            hz_to_rad_s(116e3),
            3.5e15,
            1e5,
            1.18e7,
        )
        .unwrap()
    }

    fn line(shift: f64, kind: LineKind) -> RamanLine {
        RamanLine {
            from: 0,
            to: 0,
            shift,
            kind,
            strength: 1.0,
        }
    }

    #[test]
    fn rayleigh_on_tooth_folds_to_zero() {
        let c = comb();
        let f = fold_lines(&[line(0.0, LineKind::Rayleigh)], &c, c.anchor);
        assert_eq!(f[0].folded, 0.0);
        assert_eq!(f[0].order, 0);
    }

    #[test]
    fn shift_of_whole_orders() {
        let c = comb();
        let f = fold_lines(&[line(7.0 * c.fsr, LineKind::AntiStokes)], &c, c.anchor);
        assert_eq!(f[0].order, 7);
        // absolute frequencies near 3.5e15 rad/s resolve to about 0.5 rad/s
        assert!(f[0].folded < 4.0 || c.fsr - f[0].folded < 4.0);
        assert!(f[0].detuning.abs() < 4.0);
    }

    #[test]
    fn folded_output_is_sorted() {
        let c = comb();
        let lines: Vec<_> = (0..20)
            .map(|i| line(i as f64 * 1.37e11, LineKind::AntiStokes))
            .collect();
        let f = fold_lines(&lines, &c, c.anchor + 12345.0);
        for w in f.windows(2) {
            assert!(w[0].folded <= w[1].folded);
        }
        assert!(f.iter().all(|x| x.folded >= 0.0 && x.folded < c.fsr));
        assert!(f.iter().all(|x| x.detuning.abs() <= c.fsr / 2.0));
    }

    #[test]
    fn laser_for_line_is_resonant() {
        let c = comb();
        let s = 2.1e13;
        let w = laser_for_line(&c, s);
        let m = find_resonances(&[line(s, LineKind::AntiStokes)], &c, w, c.kappa);
        assert!(m[0].resonant);
        assert!(m[0].detuning.abs() < 4.0);
        assert!((w - c.anchor).abs() <= c.fsr / 2.0);
    }

    #[test]
    fn stokes_hazard_flag() {
        let c = comb();
        let s = -4.0e13;
        let w = laser_for_line(&c, s);
        let m = find_resonances(&[line(s, LineKind::Stokes)], &c, w, c.kappa);
        assert!(m[0].is_stokes_hazard());
    }

    #[test]
    fn identical_lines_need_no_finetune() {
        let c = comb();
        let sol = solve_finetune(2e13, 2e13, &c, 1e9, c.kappa);
        assert_eq!(sol.finetune, 0.0);
        assert!(sol.feasible);
    }

    #[test]
    fn whole_fsr_difference_needs_no_finetune() {
        let c = comb();
        let a = 2.0e13;
        let sol = solve_finetune(a, a - 123.0 * c.fsr, &c, 1e9, c.kappa);
        assert_eq!(sol.finetune, 0.0);
        assert!(sol.feasible, "{sol:?}");
    }

    #[test]
    fn finetune_reports_infeasible_in_narrow_window() {
        let c = comb();
        let a = 2.0e13;
        let b = a - 123.5 * c.fsr;
        let sol = solve_finetune(a, b, &c, 1.0, c.kappa);
        assert!(!sol.feasible);
        assert!((sol.max_detuning - c.fsr / 4.0).abs() / c.fsr < 1e-3);
        let wide = solve_finetune(a, b, &c, c.fsr / 100.0, c.kappa);
        assert!(wide.feasible);
    }

    #[test]
    fn monte_carlo_matches_uniform_estimate() {
        let c = comb();
        let lines: Vec<_> = (1..=50)
            .map(|i| line(-(i as f64) * 7.31e11, LineKind::Stokes))
            .collect();
        // wide tolerance so the count is large
        let tol = c.fsr / 200.0;
        let st = stokes_coincidence_scan(&lines, &c, tol, 20_000, 7);
        let expected = st.expected_per_sample * st.samples as f64;
        assert!((st.hits as f64 - expected).abs() < 5.0 * expected.sqrt(), "{st:?}");
        let again = stokes_coincidence_scan(&lines, &c, tol, 20_000, 7);
        assert_eq!(st, again);
    }
}

//! Command-line front end.
//!
//! Every value crossing this boundary is in Hz, K or s.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::combspec::{fold_lines, stokes_coincidence_scan};
use crate::config::{ConfigError, KeyValues};
use crate::dynamics::{
    ground_population, mean_j, simulate, translational_trajectory, DynError, LaserSetting, Model, SimState,
    TimeSeries, TranslationalModel, TranslationalTrajectory,
};
use crate::molstruct::{
    boltzmann_populations, build_levels, enumerate_lines, LineKind, LineOptions, MolError, MoleculeConstants,
    OH_MOLECULE_FILE,
};
use crate::rates::{
    calibrate, reference_rates, regime_check, CalibrationTargets, CavitySpec, LaserSpec, RateError,
    RegimeThresholds,
};
use crate::scheduler::{greedy_schedule, validate_schedule, GreedyOptions, SchedError, Schedule};
use crate::units::{hz_to_rad_s, rad_s_to_hz};

/// Shipped resonator, laser and run defaults.
pub const OH_CAVITY_FILE: &str = include_str!("../data/oh_cavity.cfg");

const MOLECULE_KEYS: &[&str] = &[
    "name",
    "mass_amu",
    "B_cm",
    "D_cm",
    "we_cm",
    "wexe_cm",
    "Te_cm",
    "gamma_eff_hz",
    "alpha_iso",
    "alpha_aniso",
    "vib_factor",
];

const CONFIG_KEYS: &[&str] = &[
    "fsr_hz",
    "kappa_hz",
    "g_hz",
    "finesse",
    "length_m",
    "comb_anchor_hz",
    "finetune_hz",
    "laser_wavelength_m",
    "rabi_hz",
    "delta_hz",
    "standing_wave",
    "calib_cavity_rate_hz",
    "calib_spont_rate_hz",
    "v_max",
    "j_max",
    "initial_t_k",
    "initial_t_tr_k",
    "precool_s",
    "horizon_s",
    "epoch_s",
    "lookahead",
    "target_ground",
    "finetune_window_hz",
    "max_simultaneous",
    "match_tolerance_hz",
    "dt_max_s",
    "cadence_s",
    "translational_model",
    "min_kappa_ratio",
    "min_cooperativity",
    "mc_samples",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant monitor tripped: {0}")]
    Invariant(String),
    #[error("regime check failed")]
    Regime,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Regime => 4,
        }
    }
}

macro_rules! config_error_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Config(e.to_string())
            }
        }
    )*};
}
config_error_from!(ConfigError, MolError, RateError, DynError, SchedError, std::io::Error);

#[derive(Debug, Parser)]
#[command(name = "cavcool", version, about = "Cavity-enhanced Raman cooling of molecules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Resonator, laser and run configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Molecule data file.
    #[arg(long, global = true)]
    pub molecule: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long = "horizon-s", global = true)]
    pub horizon_s: Option<f64>,
    /// Seed for the Monte-Carlo Stokes-coincidence scan of `check`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override a configuration or molecule key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Parallel workers for parameter sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Folded anti-Stokes spectrum.
    Spectrum,
    /// Build a cooling schedule.
    Schedule,
    /// Simulate a schedule.
    Run {
        /// Schedule file, or `auto` to build one.
        #[arg(long, default_value = "auto")]
        schedule: String,
        /// Sweep one key over comma-separated values, e.g. `alpha_iso=6.9,13.8`.
        #[arg(long, value_name = "KEY=V1,V2")]
        sweep: Option<String>,
    },
    /// Regime and calibration report.
    Check,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSource {
    Auto,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub molecule: KeyValues,
    pub config: KeyValues,
    pub schedule: ScheduleSource,
    pub out: PathBuf,
}

impl RunConfig {
    /// Shipped OH defaults.
    pub fn default_oh() -> Self {
        Self {
            molecule: KeyValues::parse(OH_MOLECULE_FILE).expect("shipped molecule file"),
            config: KeyValues::parse(OH_CAVITY_FILE).expect("shipped config file"),
            schedule: ScheduleSource::Auto,
            out: PathBuf::from("out"),
        }
    }

    pub fn load(molecule: Option<&Path>, config: Option<&Path>) -> Result<Self, CliError> {
        let mut rc = Self::default_oh();
        if let Some(p) = molecule {
            rc.molecule = KeyValues::load(p)?;
        }
        if let Some(p) = config {
            rc.config = KeyValues::load(p)?;
        }
        rc.check_keys()?;
        Ok(rc)
    }

    fn check_keys(&self) -> Result<(), CliError> {
        for (kv, known, what) in [
            (&self.molecule, MOLECULE_KEYS, "molecule"),
            (&self.config, CONFIG_KEYS, "config"),
        ] {
            if let Some(k) = kv.keys().find(|k| !known.contains(k)) {
                return Err(CliError::Config(format!("unknown {what} key `{k}`")));
            }
        }
        Ok(())
    }

    /// `key=value`; molecule keys go to the molecule data, the rest to the
    /// configuration.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let key = assignment.split_once('=').map(|(k, _)| k.trim()).unwrap_or("");
        if MOLECULE_KEYS.contains(&key) {
            self.molecule.apply_override(assignment)?;
        } else if CONFIG_KEYS.contains(&key) {
            self.config.apply_override(assignment)?;
        } else {
            return Err(CliError::Config(format!("unknown key in override {assignment:?}")));
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        self.apply_override(&format!("{key}={value}"))
    }
}

/// Numerical parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    pub initial_t: f64,
    pub initial_t_tr: f64,
    pub precool: f64,
    pub horizon: f64,
    pub epoch: f64,
    pub lookahead: usize,
    pub target_ground: f64,
    pub finetune_window: f64,
    pub tolerance: f64,
    pub max_simultaneous: usize,
    pub cadence: f64,
    pub thresholds: RegimeThresholds,
    pub mc_samples: usize,
}

/// A calibrated model plus the run parameters.
#[derive(Debug, Clone)]
pub struct Setup {
    pub model: Model,
    pub params: RunParams,
}

fn positive(kv: &KeyValues, key: &str, default: f64) -> Result<f64, CliError> {
    let v = kv.f64_or(key, default)?;
    if !(v > 0.0) {
        return Err(ConfigError::Invalid {
            key: key.into(),
            reason: format!("must be positive, got {v}"),
        }
        .into());
    }
    Ok(v)
}

fn non_negative(kv: &KeyValues, key: &str, default: f64) -> Result<f64, CliError> {
    let v = kv.f64_or(key, default)?;
    if !(v >= 0.0) {
        return Err(ConfigError::Invalid {
            key: key.into(),
            reason: format!("must be non-negative, got {v}"),
        }
        .into());
    }
    Ok(v)
}

impl Setup {
    pub fn from_config(rc: &RunConfig) -> Result<Self, CliError> {
        let kv = &rc.config;
        let molecule = MoleculeConstants::from_key_values(&rc.molecule)?;
        let laser = LaserSpec::from_key_values(kv)?;
        let cavity = CavitySpec::from_key_values(kv, laser.frequency())?;
        let v_max = kv.usize_or("v_max", 0)? as u32;
        let j_max = kv.usize_or("j_max", 8)? as u32;
        let levels = build_levels(&molecule, v_max, j_max)?;
        let lines = enumerate_lines(&levels, &molecule, LineOptions::for_molecule(&molecule));
        let calibration = calibrate(&molecule, &laser, &cavity, CalibrationTargets::from_key_values(kv)?)?;
        let translational: TranslationalModel = kv
            .raw("translational_model")
            .unwrap_or("low_velocity")
            .parse()
            .map_err(|reason| ConfigError::Invalid {
                key: "translational_model".into(),
                reason,
            })?;
        let dt_max = positive(kv, "dt_max_s", 1e-3)?;
        let model = Model::new(molecule, levels, lines, laser, cavity, calibration, translational, dt_max)?;

        let default_window = match kv.opt_f64("length_m")? {
            Some(l) if l > 0.0 => rad_s_to_hz(cavity.fsr) * 50e-6 / l,
            _ => 75e6,
        };
        let params = RunParams {
            initial_t: non_negative(kv, "initial_t_k", 300.0)?,
            initial_t_tr: positive(kv, "initial_t_tr_k", 1.0)?,
            precool: non_negative(kv, "precool_s", 0.05)?,
            horizon: non_negative(kv, "horizon_s", 1.8)?,
            epoch: positive(kv, "epoch_s", 0.05)?,
            lookahead: kv.usize_or("lookahead", 2)?.max(1),
            target_ground: kv.f64_or("target_ground", 0.995)?,
            finetune_window: hz_to_rad_s(non_negative(kv, "finetune_window_hz", default_window)?),
            tolerance: hz_to_rad_s(positive(kv, "match_tolerance_hz", rad_s_to_hz(cavity.kappa))?),
            max_simultaneous: kv.usize_or("max_simultaneous", 3)?,
            cadence: positive(kv, "cadence_s", 0.01)?,
            thresholds: RegimeThresholds::from_key_values(kv)?,
            mc_samples: kv.usize_or("mc_samples", 100_000)?,
        };
        Ok(Self { model, params })
    }

    pub fn default_oh() -> Self {
        Self::from_config(&RunConfig::default_oh()).expect("shipped defaults are valid")
    }

    pub fn initial_populations(&self) -> Result<DVector<f64>, CliError> {
        Ok(DVector::from_vec(boltzmann_populations(
            &self.model.levels,
            self.params.initial_t,
        )?))
    }

    /// Rayleigh line parked one half-linewidth below its cavity mode.
    pub fn cooling_setting(&self) -> LaserSetting {
        LaserSetting::rayleigh(&self.model.cavity, -self.model.cavity.kappa)
    }

    /// Translational pre-cooling with the Rayleigh line at δω = −κ.
    pub fn precool(&self) -> Result<Option<TranslationalTrajectory>, CliError> {
        if self.params.precool == 0.0 {
            return Ok(None);
        }
        let p = self.initial_populations()?;
        Ok(Some(translational_trajectory(
            &self.model,
            &p,
            self.cooling_setting(),
            self.params.initial_t_tr,
            self.params.precool,
        )?))
    }

    /// Thermal internal state with the pre-cooled translational temperature;
    /// the clock starts at zero after pre-cooling.
    pub fn initial_state(&self) -> Result<SimState, CliError> {
        let t_tr = match self.precool()? {
            Some(tr) => tr.t_final,
            None => self.params.initial_t_tr,
        };
        Ok(SimState::new(self.initial_populations()?, t_tr))
    }

    pub fn greedy_options(&self, t_tr: f64) -> GreedyOptions {
        GreedyOptions {
            epoch: self.params.epoch,
            horizon: self.params.horizon,
            target_ground: self.params.target_ground,
            lookahead: self.params.lookahead,
            finetune_window: self.params.finetune_window,
            tolerance: self.params.tolerance,
            t_tr,
        }
    }

    pub fn auto_schedule(&self, state: &SimState) -> Result<Schedule, CliError> {
        Ok(greedy_schedule(&self.model, &state.p, &self.greedy_options(state.t_tr()))?)
    }

    pub fn simulate(&self, schedule: &Schedule, state: &SimState) -> Result<TimeSeries, CliError> {
        Ok(simulate(&self.model, &schedule.segments, state, self.params.cadence)?)
    }
}

#[derive(Debug, Serialize)]
struct LevelPopulation {
    v: u32,
    j: u32,
    p: f64,
}

#[derive(Debug, Serialize)]
struct SegmentSummary {
    t_start_s: f64,
    duration_s: f64,
    laser_hz: f64,
    finetune_hz: f64,
    lines: Vec<String>,
    mean_j_end: f64,
    ground_population_end: f64,
    t_tr_end_k: f64,
}

#[derive(Debug, Serialize)]
struct MonitorSummary {
    max_sum_drift: f64,
    max_ladder_drift: f64,
    min_population: f64,
    ok: bool,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    molecule: String,
    schedule: String,
    schedule_diagnostic: String,
    precool_t_start_k: f64,
    precool_t_end_k: f64,
    final_time_s: f64,
    mean_j: f64,
    ground_population: f64,
    t_tr_final_k: f64,
    c_cav: f64,
    c_spont: f64,
    populations: Vec<LevelPopulation>,
    monitor: MonitorSummary,
    segments: Vec<SegmentSummary>,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn cmd_spectrum(rc: &RunConfig) -> Result<String, CliError> {
    let setup = Setup::from_config(rc)?;
    let m = &setup.model;
    let laser = m.laser.frequency();
    let folded = fold_lines(&m.lines, &m.cavity, laser);
    let mut csv = String::from("line_id,Ji,Jf,kind,shift_hz,folded_hz,comb_order,strength\n");
    for f in &folded {
        let l = &m.lines[f.line];
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            l.label(&m.levels),
            m.levels.get(l.from).j,
            m.levels.get(l.to).j,
            l.kind,
            rad_s_to_hz(l.shift),
            rad_s_to_hz(f.folded),
            f.order,
            l.strength
        ));
    }
    write_file(&rc.out.join("spectrum.csv"), csv.as_bytes())?;

    let count = |k: LineKind| m.lines.iter().filter(|l| l.kind == k).count();
    let anti: Vec<_> = folded
        .iter()
        .filter(|f| m.lines[f.line].kind == LineKind::AntiStokes)
        .collect();
    let span = anti.iter().map(|f| m.lines[f.line].shift).fold(0.0, f64::max);
    let orders = folded.iter().map(|f| f.order);
    let (lo, hi) = (orders.clone().min().unwrap_or(0), orders.max().unwrap_or(0));
    let summary = format!(
        "lines: {} ({} anti-Stokes, {} Stokes, {} Rayleigh)\n\
         anti-Stokes span: {:.4} THz\n\
         comb orders: {lo} .. {hi}\n\
         FSR: {:.6} GHz\n",
        m.lines.len(),
        count(LineKind::AntiStokes),
        count(LineKind::Stokes),
        count(LineKind::Rayleigh),
        rad_s_to_hz(span) / 1e12,
        rad_s_to_hz(m.cavity.spacing()) / 1e9,
    );
    write_file(&rc.out.join("spectrum_summary.txt"), summary.as_bytes())?;
    Ok(summary)
}

pub fn cmd_schedule(rc: &RunConfig) -> Result<String, CliError> {
    let setup = Setup::from_config(rc)?;
    let state = setup.initial_state()?;
    let schedule = setup.auto_schedule(&state)?;
    let report = validate_schedule(&schedule, &setup.model, setup.params.tolerance, setup.params.max_simultaneous);
    if !report.passed() {
        return Err(CliError::Invariant(report.errors.join("; ")));
    }
    write_file(&rc.out.join("schedule.csv"), schedule.to_csv().as_bytes())?;
    let mut msg = format!(
        "{} segments, {:.3} s ({})\n",
        schedule.segments.len(),
        schedule.total_duration(),
        schedule.diagnostic
    );
    for w in &report.warnings {
        msg.push_str(&format!("warning: {w}\n"));
    }
    Ok(msg)
}

pub fn cmd_run(rc: &RunConfig) -> Result<String, CliError> {
    let setup = Setup::from_config(rc)?;
    let precool = setup.precool()?;
    let state = SimState::new(
        setup.initial_populations()?,
        precool.as_ref().map_or(setup.params.initial_t_tr, |t| t.t_final),
    );
    let (schedule, source) = match &rc.schedule {
        ScheduleSource::Auto => (setup.auto_schedule(&state)?, "auto".to_string()),
        ScheduleSource::File(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (Schedule::from_csv(&text)?, path.display().to_string())
        }
    };
    let report = validate_schedule(&schedule, &setup.model, setup.params.tolerance, setup.params.max_simultaneous);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if !report.passed() {
        eprintln!("warning: {}", report.errors.join("; "));
    }
    let ts = setup.simulate(&schedule, &state)?;

    let mut csv = Vec::new();
    ts.write_csv(&setup.model.levels, &mut csv)?;
    write_file(&rc.out.join("timeseries.csv"), &csv)?;

    let m = &setup.model;
    let last = ts.last();
    let summary = RunSummary {
        molecule: m.molecule.name.clone(),
        schedule: source,
        schedule_diagnostic: schedule.diagnostic.clone(),
        precool_t_start_k: setup.params.initial_t_tr,
        precool_t_end_k: state.t_tr(),
        final_time_s: last.t,
        mean_j: mean_j(&last.p, &m.levels),
        ground_population: ground_population(&last.p, &m.levels),
        t_tr_final_k: last.t_tr,
        c_cav: m.calibration.c_cav,
        c_spont: m.calibration.c_spont,
        populations: m
            .levels
            .iter()
            .zip(last.p.iter())
            .map(|(l, &p)| LevelPopulation { v: l.v, j: l.j, p })
            .collect(),
        monitor: MonitorSummary {
            max_sum_drift: ts.monitor.max_sum_drift,
            max_ladder_drift: ts.monitor.max_ladder_drift,
            min_population: ts.monitor.min_population,
            ok: ts.monitor.ok(),
        },
        segments: ts
            .segments
            .iter()
            .map(|s| SegmentSummary {
                t_start_s: s.t_start,
                duration_s: s.duration,
                laser_hz: s.laser_hz,
                finetune_hz: s.finetune_hz,
                lines: s.lines.clone(),
                mean_j_end: s.mean_j_end,
                ground_population_end: s.ground_end,
                t_tr_end_k: s.t_tr_end,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&rc.out.join("summary.json"), json.as_bytes())?;
    if !ts.monitor.ok() {
        return Err(CliError::Invariant(format!(
            "sum drift {:.3e}, ladder drift {:.3e}, min population {:.3e}",
            ts.monitor.max_sum_drift, ts.monitor.max_ladder_drift, ts.monitor.min_population
        )));
    }
    Ok(format!(
        "t = {} s: <J> = {:.4}, P(J=0)+P(J=1) = {:.4}, T_tr = {:.3e} K\n",
        last.t, summary.mean_j, summary.ground_population, last.t_tr
    ))
}

/// Returns the report text and whether every regime condition holds.
pub fn cmd_check(rc: &RunConfig, seed: Option<u64>) -> Result<(String, bool), CliError> {
    let setup = Setup::from_config(rc)?;
    let m = &setup.model;
    let report = regime_check(&m.laser, &m.cavity, &m.molecule, setup.params.thresholds);
    let (cav, spont) = reference_rates(&m.molecule, &m.laser, &m.cavity, &m.calibration);
    let mut text = report.to_string();
    text.push_str(&format!(
        "C_cav = {:.6e}\nC_spont = {:.6e}\nreference temperature = {:.4e} K\n\
         Rayleigh cavity rate = {cav:.6} 1/s\nRayleigh spontaneous rate = {spont:.6} 1/s\n",
        m.calibration.c_cav, m.calibration.c_spont, m.calibration.t_ref
    ));
    if !m.cavity.is_consistent() {
        eprintln!(
            "warning: 2*kappa differs from FSR/finesse by {:.3e} (relative)",
            m.cavity.finesse_mismatch()
        );
    }
    if let Some(seed) = seed {
        let st = stokes_coincidence_scan(&m.lines, &m.cavity, setup.params.tolerance, setup.params.mc_samples, seed);
        text.push_str(&format!(
            "Stokes coincidences: {} in {} draws ({} lines, expected {:.3})\n",
            st.hits,
            st.samples,
            st.stokes_lines,
            st.expected_per_sample * st.samples as f64
        ));
    }
    Ok((text, report.all_pass()))
}

/// Parses `key=v1,v2,...`.
pub fn parse_sweep(arg: &str) -> Result<(String, Vec<String>), CliError> {
    let (k, vs) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("sweep {arg:?} is not KEY=V1,V2")))?;
    let values: Vec<String> = vs.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Config(format!("sweep {arg:?} has no values")));
    }
    Ok((k.trim().to_string(), values))
}

/// Runs each sweep value in its own output subdirectory on `jobs` workers.
pub fn cmd_sweep(rc: &RunConfig, key: &str, values: &[String], jobs: usize) -> Result<String, CliError> {
    let configs = values
        .iter()
        .map(|v| {
            let mut c = rc.clone();
            c.set(key, v)?;
            c.out = rc.out.join(format!("{key}={v}"));
            Ok(c)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let results: Mutex<Vec<Option<Result<String, CliError>>>> =
        Mutex::new((0..configs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(configs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= configs.len() {
                    break;
                }
                let r = cmd_run(&configs[i]);
                results.lock().expect("no poisoned workers")[i] = Some(r);
            });
        }
    });
    let mut text = String::new();
    for (v, r) in values.iter().zip(results.into_inner().expect("workers done")) {
        let r = r.expect("every job ran")?;
        text.push_str(&format!("{key}={v}: {r}"));
    }
    Ok(text)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err((text, err)) => {
            print!("{text}");
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<String, (String, CliError)> {
    let plain = |e: CliError| (String::new(), e);
    let mut rc = RunConfig::load(cli.molecule.as_deref(), cli.config.as_deref()).map_err(plain)?;
    rc.out = cli.out.clone();
    for s in &cli.set {
        rc.apply_override(s).map_err(plain)?;
    }
    if let Some(h) = cli.horizon_s {
        rc.set("horizon_s", &h.to_string()).map_err(plain)?;
    }
    match &cli.command {
        Command::Spectrum => cmd_spectrum(&rc).map_err(plain),
        Command::Schedule => cmd_schedule(&rc).map_err(plain),
        Command::Run { schedule, sweep } => {
            if schedule != "auto" {
                rc.schedule = ScheduleSource::File(PathBuf::from(schedule));
            }
            match sweep {
                Some(arg) => {
                    let (key, values) = parse_sweep(arg).map_err(plain)?;
                    cmd_sweep(&rc, &key, &values, cli.jobs).map_err(plain)
                }
                None => cmd_run(&rc).map_err(plain),
            }
        }
        Command::Check => {
            let (text, ok) = cmd_check(&rc, cli.seed).map_err(plain)?;
            if ok {
                Ok(text)
            } else {
                Err((text, CliError::Regime))
            }
        }
    }
}

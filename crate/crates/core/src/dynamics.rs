//! Population rate equations and the semiclassical translational energy
//! under a piecewise-constant laser schedule.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::combspec::nearest_tooth;
use crate::molstruct::{total_strengths, Ladder, LevelSet, LineKind, MoleculeConstants, RamanLine};
use crate::rates::{
    cavity_emission_branches, lorentzian, pump_excitation, spontaneous_raman_rate, thermal_momentum,
    Calibration, CavitySpec, LaserSpec,
};
use crate::scheduler::ScheduleSegment;
use crate::units::{self, HBAR};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynError {
    #[error("line {line} refers to level {level}, but the level set has {n} levels")]
    DimensionMismatch { line: usize, level: usize, n: usize },
    #[error("state vector has {got} entries, expected {expected}")]
    StateSize { got: usize, expected: usize },
    #[error("required step {dt:.3e} s is below 1e-12 s; rates are too stiff")]
    StepUnderflow { dt: f64 },
    #[error(
        "heating configuration: Rayleigh detuning {detuning_hz:.1} Hz is not on the red side of \
         the cavity mode, no translational equilibrium exists"
    )]
    HeatingConfiguration { detuning_hz: f64 },
    #[error("schedule segment {segment} addresses unknown line {label:?}")]
    UnknownLine { segment: usize, label: String },
    #[error("segment {segment} has non-positive duration {duration}")]
    NonPositiveDuration { segment: usize, duration: f64 },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

/// Translational-energy equation used for the cavity-axis motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranslationalModel {
    /// First order in k·p/M around the resonance.
    LowVelocity,
    /// Full average over the 1-D thermal momentum distribution.
    ThermalAverage,
}

impl std::str::FromStr for TranslationalModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low_velocity" => Ok(Self::LowVelocity),
            "thermal_average" => Ok(Self::ThermalAverage),
            _ => Err(format!("expected low_velocity or thermal_average, got {s:?}")),
        }
    }
}

/// Laser frequency and comb fine-tune, both rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserSetting {
    pub laser: f64,
    pub finetune: f64,
}

impl LaserSetting {
    /// Puts the Rayleigh line `detuning` away from the anchor tooth.
    pub fn rayleigh(cavity: &CavitySpec, detuning: f64) -> Self {
        Self {
            laser: cavity.anchor + detuning,
            finetune: 0.0,
        }
    }
}

/// Everything the rate equations need about one molecule in one resonator.
#[derive(Debug, Clone)]
pub struct Model {
    pub molecule: MoleculeConstants,
    pub levels: LevelSet,
    pub lines: Vec<RamanLine>,
    pub laser: LaserSpec,
    pub cavity: CavitySpec,
    pub calibration: Calibration,
    pub translational: TranslationalModel,
    pub dt_max: f64,
    s_tot: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineRate {
    pub spont: f64,
    pub cavity_plus: f64,
    pub cavity_minus: f64,
    pub detuning: f64,
}

impl LineRate {
    pub fn cavity(&self) -> f64 {
        self.cavity_plus + self.cavity_minus
    }

    pub fn total(&self) -> f64 {
        self.spont + self.cavity()
    }
}

impl Model {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        molecule: MoleculeConstants,
        levels: LevelSet,
        lines: Vec<RamanLine>,
        laser: LaserSpec,
        cavity: CavitySpec,
        calibration: Calibration,
        translational: TranslationalModel,
        dt_max: f64,
    ) -> Result<Self, DynError> {
        let n = levels.len();
        for (i, l) in lines.iter().enumerate() {
            for level in [l.from, l.to] {
                if level >= n {
                    return Err(DynError::DimensionMismatch { line: i, level, n });
                }
            }
        }
        if !(dt_max > 0.0) {
            return Err(DynError::NonPositive("dt_max"));
        }
        let s_tot = total_strengths(&lines, n);
        Ok(Self {
            molecule,
            levels,
            lines,
            laser,
            cavity,
            calibration,
            translational,
            dt_max,
            s_tot,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn line_index(&self, label: &str) -> Option<usize> {
        self.lines.iter().position(|l| l.label(&self.levels) == label)
    }

    fn comb(&self, setting: LaserSetting) -> CavitySpec {
        self.cavity.with_finetune(setting.finetune)
    }

    /// Pump excitation γ_i of the level a line starts from and its branching
    /// fraction into the line.
    fn pump_and_branching(&self, line: &RamanLine, p: f64) -> (f64, f64) {
        let tot = self.s_tot[line.from];
        if tot == 0.0 {
            return (0.0, 0.0);
        }
        let m = &self.molecule;
        let gamma = pump_excitation(tot / self.calibration.s_ref, &self.laser, m.gamma_eff, p, m.mass);
        (gamma, line.strength / tot)
    }

    fn rate_at(&self, line: &RamanLine, cavity: &CavitySpec, detuning: f64, t_tr: f64) -> LineRate {
        let m = &self.molecule;
        let p = thermal_momentum(m.mass, t_tr);
        let (gamma, beta) = self.pump_and_branching(line, p);
        let (cavity_plus, cavity_minus) =
            cavity_emission_branches(gamma, cavity, beta, detuning, p, m.mass, self.calibration.c_cav);
        LineRate {
            spont: spontaneous_raman_rate(gamma, beta, m.gamma_eff, self.calibration.c_spont),
            cavity_plus,
            cavity_minus,
            detuning,
        }
    }

    /// Rates of every line, in line order.
    pub fn line_rates(&self, setting: LaserSetting, t_tr: f64) -> Vec<LineRate> {
        let cav = self.comb(setting);
        self.lines
            .iter()
            .map(|l| {
                let (_, dw) = nearest_tooth(&cav, setting.laser + l.shift);
                self.rate_at(l, &cav, dw, t_tr)
            })
            .collect()
    }

    /// Rates of line `i` if it were exactly on a cavity tooth.
    pub fn resonant_rate(&self, i: usize, t_tr: f64) -> LineRate {
        self.rate_at(&self.lines[i], &self.cavity, 0.0, t_tr)
    }

    /// Same model with both polarizability components scaled, calibration
    /// unchanged.
    pub fn with_polarizability_scale(&self, factor: f64) -> Self {
        let molecule = self.molecule.with_polarizability_scale(factor);
        let f2 = factor * factor;
        let lines: Vec<RamanLine> = self
            .lines
            .iter()
            .map(|l| RamanLine {
                strength: l.strength * f2,
                ..*l
            })
            .collect();
        let s_tot = total_strengths(&lines, self.levels.len());
        Self {
            molecule,
            lines,
            s_tot,
            ..self.clone()
        }
    }
}

/// Generator of the population dynamics plus the Rayleigh drive of the
/// translational motion.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    /// `w[(f, i)]` is the rate i → f (1/s); diagonal holds minus the column sums.
    pub w: DMatrix<f64>,
    /// Per-level amplitude A_i of the two cavity branches of the Rayleigh
    /// line, Γ^{κ,±} = A_i·L(δω ± k p/M).
    pub rayleigh_amp: DVector<f64>,
    pub rayleigh_detuning: f64,
    pub kappa: f64,
    pub k: f64,
    pub mass: f64,
}

impl RateMatrix {
    pub fn max_diagonal(&self) -> f64 {
        self.w.diagonal().iter().fold(0.0f64, |a, &x| a.max(x.abs()))
    }

    /// Largest |∂Ė/∂E| over probability vectors.
    fn translational_stiffness(&self) -> f64 {
        let a = self.rayleigh_amp.iter().fold(0.0f64, |m, &x| m.max(x));
        let d = self.rayleigh_detuning;
        let kk = self.kappa;
        a * lorentzian(d, kk) * 8.0 * HBAR * d.abs() * self.k * self.k / (self.mass * (d * d + kk * kk))
    }
}

/// Builds W for one laser setting with Doppler terms taken at the thermal
/// momentum of `t_tr`.
pub fn build_rate_matrix(model: &Model, setting: LaserSetting, t_tr: f64) -> RateMatrix {
    let n = model.n_levels();
    let mut w = DMatrix::zeros(n, n);
    let mut rayleigh_amp = DVector::zeros(n);
    let cav = model.comb(setting);
    let (_, rayleigh_detuning) = nearest_tooth(&cav, setting.laser);
    let p = thermal_momentum(model.molecule.mass, t_tr);
    for (line, rate) in model.lines.iter().zip(model.line_rates(setting, t_tr)) {
        if line.kind == LineKind::Rayleigh {
            let (gamma, beta) = model.pump_and_branching(line, p);
            rayleigh_amp[line.from] +=
                model.calibration.c_cav * 2.0 * cav.kappa * gamma * 0.5 * cav.g * cav.g * beta;
            continue;
        }
        let r = rate.total();
        w[(line.to, line.from)] += r;
        w[(line.from, line.from)] -= r;
    }
    RateMatrix {
        w,
        rayleigh_amp,
        rayleigh_detuning,
        kappa: cav.kappa,
        k: cav.k,
        mass: model.molecule.mass,
    }
}

/// Ė for a mean 1-D kinetic energy `e` driven by the two cavity branches of
/// amplitude `amp` at detuning `dw`.
pub fn energy_rate(
    model: TranslationalModel,
    e: f64,
    amp: f64,
    dw: f64,
    kappa: f64,
    k: f64,
    mass: f64,
) -> f64 {
    let e_rec = HBAR * HBAR * k * k / (2.0 * mass);
    energy_rate_with_recoil(model, e, amp, dw, kappa, k, mass, e_rec)
}

/// [`energy_rate`] with an explicit recoil energy.
#[allow(clippy::too_many_arguments)]
pub fn energy_rate_with_recoil(
    model: TranslationalModel,
    e: f64,
    amp: f64,
    dw: f64,
    kappa: f64,
    k: f64,
    mass: f64,
    e_rec: f64,
) -> f64 {
    if amp == 0.0 {
        return 0.0;
    }
    match model {
        TranslationalModel::LowVelocity => {
            let l = lorentzian(dw, kappa);
            amp * l * (8.0 * HBAR * dw * k * k * e / (mass * (dw * dw + kappa * kappa)) + 4.0 * e_rec)
        }
        TranslationalModel::ThermalAverage => {
            let sigma = k * (2.0 * mass * e.max(0.0)).sqrt() / mass;
            if sigma == 0.0 {
                return 4.0 * amp * lorentzian(dw, kappa) * e_rec;
            }
            // both branches map onto the + branch under u → −u
            let f = |u: f64| {
                let z = u / sigma;
                (-0.5 * z * z).exp() * lorentzian(dw + u, kappa) * (-HBAR * u + 2.0 * e_rec)
            };
            let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            2.0 * amp * norm * integrate_peaked(f, -9.0 * sigma, 9.0 * sigma, -dw, kappa, sigma)
        }
    }
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Composite 8-point Gauss-Legendre on [a, b] with panels graded
/// geometrically around a Lorentzian peak at `center` of half-width `width`
/// and uniform panels of `scale/2` elsewhere.
fn integrate_peaked(f: impl Fn(f64) -> f64, a: f64, b: f64, center: f64, width: f64, scale: f64) -> f64 {
    let mut cuts = vec![a, b];
    let n_uniform = ((b - a) / (0.5 * scale)).ceil().min(400.0) as usize;
    for i in 1..n_uniform {
        cuts.push(a + (b - a) * i as f64 / n_uniform as f64);
    }
    let mut h = 0.25 * width;
    while h < (b - a) {
        cuts.push(center - h);
        cuts.push(center + h);
        h *= 2.0;
    }
    cuts.push(center);
    cuts.retain(|&x| x >= a && x <= b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            half * GL8.iter().map(|&(x, wt)| wt * f(mid + half * x)).sum::<f64>()
        })
        .sum()
}

/// Equilibrium temperature of the low-velocity equation,
/// ħ(δω² + κ²)/(2|δω|k_B). `None` unless δω < 0.
pub fn low_velocity_equilibrium(dw: f64, kappa: f64) -> Option<f64> {
    (dw < 0.0).then(|| HBAR * (dw * dw + kappa * kappa) / (2.0 * dw.abs() * units::K_B))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub p: DVector<f64>,
    /// Mean 1-D kinetic energy (J).
    pub energy: f64,
}

impl SimState {
    pub fn new(p: DVector<f64>, t_tr: f64) -> Self {
        Self {
            t: 0.0,
            p,
            energy: units::kelvin_to_energy_1d(t_tr),
        }
    }

    pub fn t_tr(&self) -> f64 {
        units::energy_1d_to_kelvin(self.energy)
    }
}

fn step_plan(duration: f64, bound: f64) -> Result<(usize, f64), DynError> {
    if duration <= 0.0 {
        return Ok((0, 0.0));
    }
    let n = (duration / bound).ceil().max(1.0);
    let dt = duration / n;
    if dt < 1e-12 {
        return Err(DynError::StepUnderflow { dt });
    }
    Ok((n as usize, dt))
}

fn step_bound(rm: &RateMatrix, dt_max: f64, with_energy: bool) -> f64 {
    let mut bound = dt_max;
    let d = rm.max_diagonal();
    if d > 0.0 {
        bound = bound.min(0.1 / d);
    }
    if with_energy {
        let s = rm.translational_stiffness();
        if s > 0.0 {
            bound = bound.min(0.1 / s);
        }
    }
    bound
}

/// Advances (P, E) jointly over `duration` with classical RK4.
fn advance(
    rm: &RateMatrix,
    model: TranslationalModel,
    p: &mut DVector<f64>,
    e: &mut f64,
    duration: f64,
    dt_max: f64,
) -> Result<(), DynError> {
    let (n, dt) = step_plan(duration, step_bound(rm, dt_max, true))?;
    let de = |p: &DVector<f64>, e: f64| {
        let amp = rm.rayleigh_amp.dot(p);
        energy_rate(model, e, amp, rm.rayleigh_detuning, rm.kappa, rm.k, rm.mass)
    };
    for _ in 0..n {
        let k1 = &rm.w * &*p;
        let l1 = de(p, *e);
        let p2 = &*p + &k1 * (0.5 * dt);
        let k2 = &rm.w * &p2;
        let l2 = de(&p2, *e + 0.5 * dt * l1);
        let p3 = &*p + &k2 * (0.5 * dt);
        let k3 = &rm.w * &p3;
        let l3 = de(&p3, *e + 0.5 * dt * l2);
        let p4 = &*p + &k3 * dt;
        let k4 = &rm.w * &p4;
        let l4 = de(&p4, *e + dt * l3);
        *p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        *e = (*e + dt / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4)).max(0.0);
    }
    Ok(())
}

/// dP/dt = W·P by fixed-step RK4; returns (t, P) after every step, starting
/// with (0, P0).
pub fn integrate_populations(
    w: &DMatrix<f64>,
    p0: &DVector<f64>,
    duration: f64,
    dt_max: f64,
) -> Result<Vec<(f64, DVector<f64>)>, DynError> {
    if w.nrows() != p0.len() || w.ncols() != p0.len() {
        return Err(DynError::StateSize {
            got: p0.len(),
            expected: w.nrows(),
        });
    }
    if !(dt_max > 0.0) {
        return Err(DynError::NonPositive("dt_max"));
    }
    let d = w.diagonal().iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let bound = if d > 0.0 { dt_max.min(0.1 / d) } else { dt_max };
    let (n, dt) = step_plan(duration, bound)?;
    let mut out = Vec::with_capacity(n + 1);
    let mut p = p0.clone();
    out.push((0.0, p.clone()));
    for i in 0..n {
        p = rk4_linear(w, &p, dt);
        out.push(((i + 1) as f64 * dt, p.clone()));
    }
    Ok(out)
}

fn rk4_linear(w: &DMatrix<f64>, p: &DVector<f64>, dt: f64) -> DVector<f64> {
    let k1 = w * p;
    let k2 = w * (p + &k1 * (0.5 * dt));
    let k3 = w * (p + &k2 * (0.5 * dt));
    let k4 = w * (p + &k3 * dt);
    p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// One-step RK4 propagator of dP/dt = W·P over `duration`, as a matrix.
pub fn propagator(w: &DMatrix<f64>, duration: f64, dt_max: f64) -> Result<DMatrix<f64>, DynError> {
    let n = w.nrows();
    let d = w.diagonal().iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let bound = if d > 0.0 { dt_max.min(0.1 / d) } else { dt_max };
    let (steps, dt) = step_plan(duration, bound)?;
    let id = DMatrix::<f64>::identity(n, n);
    let a = w * dt;
    let a2 = &a * &a;
    let a3 = &a2 * &a;
    let a4 = &a3 * &a;
    let one = &id + &a + &a2 * 0.5 + &a3 * (1.0 / 6.0) + &a4 * (1.0 / 24.0);
    let mut u = id;
    for _ in 0..steps {
        u = &one * &u;
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationalTrajectory {
    pub times: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub t_final: f64,
    /// Time for T − T_final to fall to 1/e of its initial value.
    pub tau: Option<f64>,
}

/// Cavity cooling of the translational motion with the populations frozen
/// at `p`. Only the elastic (Rayleigh) lines act on the motion.
pub fn translational_trajectory(
    model: &Model,
    p: &DVector<f64>,
    setting: LaserSetting,
    t_initial: f64,
    duration: f64,
) -> Result<TranslationalTrajectory, DynError> {
    if !(t_initial > 0.0) {
        return Err(DynError::NonPositive("initial translational temperature"));
    }
    if p.len() != model.n_levels() {
        return Err(DynError::StateSize {
            got: p.len(),
            expected: model.n_levels(),
        });
    }
    let rm = build_rate_matrix(model, setting, t_initial);
    if rm.rayleigh_detuning >= 0.0 {
        return Err(DynError::HeatingConfiguration {
            detuning_hz: units::rad_s_to_hz(rm.rayleigh_detuning),
        });
    }
    let amp = rm.rayleigh_amp.dot(p);
    let ode = |e: f64| energy_rate(model.translational, e, amp, rm.rayleigh_detuning, rm.kappa, rm.k, rm.mass);
    let (n, dt) = step_plan(duration, step_bound(&rm, model.dt_max, true))?;
    let mut e = units::kelvin_to_energy_1d(t_initial);
    let mut times = Vec::with_capacity(n + 1);
    let mut temperatures = Vec::with_capacity(n + 1);
    times.push(0.0);
    temperatures.push(t_initial);
    for i in 0..n {
        let k1 = ode(e);
        let k2 = ode(e + 0.5 * dt * k1);
        let k3 = ode(e + 0.5 * dt * k2);
        let k4 = ode(e + dt * k3);
        e = (e + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).max(0.0);
        times.push((i + 1) as f64 * dt);
        temperatures.push(units::energy_1d_to_kelvin(e));
    }
    let t_final = *temperatures.last().expect("non-empty");
    let target = t_final + (t_initial - t_final) / std::f64::consts::E;
    let tau = temperatures.windows(2).zip(times.windows(2)).find_map(|(tw, sw)| {
        (tw[0] > target && tw[1] <= target)
            .then(|| sw[0] + (sw[1] - sw[0]) * (tw[0] - target) / (tw[0] - tw[1]))
    });
    Ok(TranslationalTrajectory {
        times,
        temperatures,
        t_final,
        tau,
    })
}

pub fn mean_j(p: &DVector<f64>, levels: &LevelSet) -> f64 {
    levels.iter().zip(p.iter()).map(|(l, &x)| x * l.j as f64).sum()
}

/// P(v=0, J=0) + P(v=0, J=1)
pub fn ground_population(p: &DVector<f64>, levels: &LevelSet) -> f64 {
    [0, 1]
        .iter()
        .filter_map(|&j| levels.position(0, j))
        .map(|i| p[i])
        .sum()
}

pub fn ladder_population(p: &DVector<f64>, levels: &LevelSet, ladder: Ladder) -> f64 {
    levels
        .iter()
        .zip(p.iter())
        .filter(|(l, _)| l.ladder() == ladder)
        .map(|(_, &x)| x)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub p: DVector<f64>,
    pub mean_j: f64,
    pub t_tr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentReport {
    pub t_start: f64,
    pub duration: f64,
    pub laser_hz: f64,
    pub finetune_hz: f64,
    pub lines: Vec<String>,
    pub mean_j_end: f64,
    pub ground_end: f64,
    pub t_tr_end: f64,
}

/// Worst deviations seen by the conservation monitors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Monitor {
    pub max_sum_drift: f64,
    pub max_ladder_drift: f64,
    pub min_population: f64,
}

impl Monitor {
    pub const TOLERANCE: f64 = 1e-9;
    pub const NEGATIVITY: f64 = -1e-12;

    pub fn ok(&self) -> bool {
        self.max_sum_drift <= Self::TOLERANCE
            && self.max_ladder_drift <= Self::TOLERANCE
            && self.min_population >= Self::NEGATIVITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
    pub segments: Vec<SegmentReport>,
    pub monitor: Monitor,
}

impl TimeSeries {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("time series always holds the initial state")
    }

    /// Sample closest to `t`.
    pub fn at(&self, t: f64) -> &Sample {
        self.samples
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("non-empty")
    }

    pub fn write_csv<W: Write>(&self, levels: &LevelSet, mut out: W) -> io::Result<()> {
        write!(out, "t_s,meanJ,T_tr_K")?;
        for l in levels.iter() {
            write!(out, ",P_v{}_J{}", l.v, l.j)?;
        }
        writeln!(out)?;
        for s in &self.samples {
            write!(out, "{},{},{}", s.t, s.mean_j, s.t_tr)?;
            for x in s.p.iter() {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn sample(state: &SimState, levels: &LevelSet) -> Sample {
    Sample {
        t: state.t,
        p: state.p.clone(),
        mean_j: mean_j(&state.p, levels),
        t_tr: state.t_tr(),
    }
}

/// Runs a schedule from `initial`, sampling every `cadence` seconds and at
/// the end.
pub fn simulate(
    model: &Model,
    schedule: &[ScheduleSegment],
    initial: &SimState,
    cadence: f64,
) -> Result<TimeSeries, DynError> {
    if !(cadence > 0.0) {
        return Err(DynError::NonPositive("output cadence"));
    }
    if initial.p.len() != model.n_levels() {
        return Err(DynError::StateSize {
            got: initial.p.len(),
            expected: model.n_levels(),
        });
    }
    for (i, seg) in schedule.iter().enumerate() {
        if !(seg.duration > 0.0) {
            return Err(DynError::NonPositiveDuration {
                segment: i,
                duration: seg.duration,
            });
        }
        if let Some(label) = seg.lines.iter().find(|l| model.line_index(l).is_none()) {
            return Err(DynError::UnknownLine {
                segment: i,
                label: label.clone(),
            });
        }
    }

    let levels = &model.levels;
    let even0 = ladder_population(&initial.p, levels, Ladder::Even);
    let odd0 = ladder_population(&initial.p, levels, Ladder::Odd);
    let sum0 = initial.p.sum();
    let mut monitor = Monitor {
        min_population: initial.p.min(),
        ..Monitor::default()
    };
    let mut watch = |p: &DVector<f64>| {
        monitor.max_sum_drift = monitor.max_sum_drift.max((p.sum() - sum0).abs());
        let de = (ladder_population(p, levels, Ladder::Even) - even0).abs();
        let dodd = (ladder_population(p, levels, Ladder::Odd) - odd0).abs();
        monitor.max_ladder_drift = monitor.max_ladder_drift.max(de.max(dodd));
        monitor.min_population = monitor.min_population.min(p.min());
    };

    let t0 = initial.t;
    let mut state = initial.clone();
    let mut samples = vec![sample(&state, levels)];
    let mut segments = Vec::with_capacity(schedule.len());
    let mut k = 1u64;
    let eps = 1e-12 * cadence;
    let mut seg_start = t0;
    for seg in schedule {
        let seg_end = seg_start + seg.duration;
        let rm = build_rate_matrix(model, seg.setting(), state.t_tr());
        while state.t < seg_end - eps {
            let next_sample = t0 + k as f64 * cadence;
            let next = if next_sample < seg_end - eps { next_sample } else { seg_end };
            advance(
                &rm,
                model.translational,
                &mut state.p,
                &mut state.energy,
                next - state.t,
                model.dt_max,
            )?;
            state.t = next;
            watch(&state.p);
            if (next - next_sample).abs() <= eps || next > next_sample {
                samples.push(sample(&state, levels));
                k += 1;
            }
        }
        segments.push(SegmentReport {
            t_start: seg_start,
            duration: seg.duration,
            laser_hz: seg.laser_hz,
            finetune_hz: seg.finetune_hz,
            lines: seg.lines.clone(),
            mean_j_end: mean_j(&state.p, levels),
            ground_end: ground_population(&state.p, levels),
            t_tr_end: state.t_tr(),
        });
        seg_start = seg_end;
    }
    if samples.last().map(|s| s.t) != Some(state.t) {
        samples.push(sample(&state, levels));
    }
    Ok(TimeSeries {
        samples,
        segments,
        monitor,
    })
}

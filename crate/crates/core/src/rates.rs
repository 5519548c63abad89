//! Spontaneous and cavity-enhanced Raman scattering rates, their Doppler
//! dependence, the global rate calibration and the regime-validity report.
//!
//! Frequencies are angular (rad/s). Rates are events per second.

use std::fmt;

use thiserror::Error;

use crate::config::{ConfigError, KeyValues};
use crate::molstruct::MoleculeConstants;
use crate::units::{self, C, HBAR, K_B};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("invalid laser parameter: {0}")]
    Laser(String),
    #[error("invalid cavity parameter: {0}")]
    Cavity(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserSpec {
    /// m
    pub wavelength: f64,
    /// Rabi coupling of the 0→0 reference transition.
    pub rabi: f64,
    /// Detuning from the effective electronic transition.
    pub delta: f64,
    /// |k_L| (rad/m)
    pub k: f64,
    pub standing_wave: bool,
}

impl LaserSpec {
    pub fn new(wavelength: f64, rabi: f64, delta: f64, standing_wave: bool) -> Result<Self, RateError> {
        if !(wavelength > 0.0) {
            return Err(RateError::Laser("wavelength must be positive".into()));
        }
        if !(delta.abs() > 0.0) || !delta.is_finite() {
            return Err(RateError::Laser("detuning must be non-zero".into()));
        }
        if !(rabi >= 0.0) {
            return Err(RateError::Laser("Rabi coupling must be non-negative".into()));
        }
        Ok(Self {
            wavelength,
            rabi,
            delta,
            k: units::wavenumber_of_wavelength(wavelength),
            standing_wave,
        })
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self, RateError> {
        Self::new(
            kv.f64("laser_wavelength_m")?,
            units::hz_to_rad_s(kv.f64("rabi_hz")?),
            units::hz_to_rad_s(kv.f64("delta_hz")?),
            kv.bool_or("standing_wave", false)?,
        )
    }

    /// Carrier angular frequency 2πc/λ.
    pub fn frequency(&self) -> f64 {
        self.k * C
    }
}

/// Equidistant comb of longitudinal resonator modes.
///
/// Teeth sit at `anchor + n·(fsr + finetune)`. The fine-tune is the change
/// of mode spacing produced by a small length change, FSR·δL/L, so the tooth
/// at the anchor stays put and the others fan out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySpec {
    pub fsr: f64,
    /// Half-linewidth κ.
    pub kappa: f64,
    /// Coupling of the 0→0 reference transition.
    pub g: f64,
    pub anchor: f64,
    pub finetune: f64,
    pub finesse: f64,
    /// rad/m
    pub k: f64,
}

impl CavitySpec {
    pub fn new(
        fsr: f64,
        kappa: f64,
        g: f64,
        anchor: f64,
        finesse: f64,
        k: f64,
    ) -> Result<Self, RateError> {
        if !(fsr > 0.0) {
            return Err(RateError::Cavity("FSR must be positive".into()));
        }
        if !(kappa > 0.0) {
            return Err(RateError::Cavity("kappa must be positive".into()));
        }
        if !(g >= 0.0) {
            return Err(RateError::Cavity("g must be non-negative".into()));
        }
        if !(finesse > 0.0) {
            return Err(RateError::Cavity("finesse must be positive".into()));
        }
        if !(k > 0.0) {
            return Err(RateError::Cavity("cavity wavevector must be positive".into()));
        }
        Ok(Self {
            fsr,
            kappa,
            g,
            anchor,
            finetune: 0.0,
            finesse,
            k,
        })
    }

    /// Linear resonator of length `length` with FSR = πc/L and 2κ = FSR/F.
    pub fn from_length(length: f64, finesse: f64, g: f64, anchor: f64) -> Result<Self, RateError> {
        if !(length > 0.0) {
            return Err(RateError::Cavity("length must be positive".into()));
        }
        let fsr = std::f64::consts::PI * C / length;
        let k = anchor / C;
        Self::new(fsr, fsr / finesse / 2.0, g, anchor, finesse, k)
    }

    /// Reads the cavity keys; the anchor defaults to `laser_frequency`.
    pub fn from_key_values(kv: &KeyValues, laser_frequency: f64) -> Result<Self, RateError> {
        let anchor = kv
            .opt_f64("comb_anchor_hz")?
            .map(units::hz_to_rad_s)
            .unwrap_or(laser_frequency);
        let fsr = match kv.opt_f64("fsr_hz")? {
            Some(f) => units::hz_to_rad_s(f),
            None => std::f64::consts::PI * C / kv.f64("length_m")?,
        };
        let finesse = kv.f64("finesse")?;
        let kappa = match kv.opt_f64("kappa_hz")? {
            Some(k) => units::hz_to_rad_s(k),
            None => fsr / finesse / 2.0,
        };
        let mut cav = Self::new(
            fsr,
            kappa,
            units::hz_to_rad_s(kv.f64("g_hz")?),
            anchor,
            finesse,
            anchor / C,
        )?;
        cav.finetune = units::hz_to_rad_s(kv.f64_or("finetune_hz", 0.0)?);
        cav.check_finetune()?;
        Ok(cav)
    }

    pub fn with_finetune(&self, finetune: f64) -> Self {
        Self { finetune, ..*self }
    }

    fn check_finetune(&self) -> Result<(), RateError> {
        if !(self.finetune.abs() < self.fsr) {
            return Err(RateError::Cavity("fine-tune must be smaller than the FSR".into()));
        }
        Ok(())
    }

    /// Mode spacing including the fine-tune.
    pub fn spacing(&self) -> f64 {
        self.fsr + self.finetune
    }

    pub fn tooth(&self, n: i64) -> f64 {
        self.anchor + n as f64 * self.spacing()
    }

    /// Relative mismatch |2κ − FSR/F| / (FSR/F).
    pub fn finesse_mismatch(&self) -> f64 {
        let full = self.fsr / self.finesse;
        (2.0 * self.kappa - full).abs() / full
    }

    pub fn is_consistent(&self) -> bool {
        self.finesse_mismatch() <= 1e-6
    }
}

/// 1/(detuning² + halfwidth²)
pub fn lorentzian(detuning: f64, halfwidth: f64) -> f64 {
    1.0 / (detuning * detuning + halfwidth * halfwidth)
}

/// Far-detuned excitation fraction γ of a transition with strength `s_rel`
/// relative to the 0→0 reference line.
pub fn pump_excitation(s_rel: f64, laser: &LaserSpec, gamma_eff: f64, p: f64, mass: f64) -> f64 {
    let shift = laser.k * p / mass;
    let half = 0.5 * gamma_eff;
    let omega2 = laser.rabi * laser.rabi;
    let lor = if laser.standing_wave {
        0.5 * (lorentzian(laser.delta + shift, half) + lorentzian(laser.delta - shift, half))
    } else {
        lorentzian(laser.delta + shift, half)
    };
    s_rel * omega2 * lor
}

pub fn spontaneous_raman_rate(gamma: f64, beta: f64, gamma_eff: f64, c_spont: f64) -> f64 {
    c_spont * beta * gamma_eff * gamma
}

/// Forward (+) and backward (−) cavity emission rates for a photon detuned
/// by `dw` from its nearest mode.
pub fn cavity_emission_branches(
    gamma: f64,
    cavity: &CavitySpec,
    s_c: f64,
    dw: f64,
    p: f64,
    mass: f64,
    c_cav: f64,
) -> (f64, f64) {
    let u = cavity.k * p / mass;
    let amp = c_cav * 2.0 * cavity.kappa * gamma * 0.5 * cavity.g * cavity.g * s_c;
    (
        amp * lorentzian(dw + u, cavity.kappa),
        amp * lorentzian(dw - u, cavity.kappa),
    )
}

pub fn cavity_emission_rate(
    gamma: f64,
    cavity: &CavitySpec,
    s_c: f64,
    dw: f64,
    p: f64,
    mass: f64,
    c_cav: f64,
) -> f64 {
    let (plus, minus) = cavity_emission_branches(gamma, cavity, s_c, dw, p, mass, c_cav);
    plus + minus
}

/// 1-D thermal momentum scale √(M k_B T).
pub fn thermal_momentum(mass: f64, t: f64) -> f64 {
    (mass * K_B * t.max(0.0)).sqrt()
}

/// Rate scale factors shared by every line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub c_cav: f64,
    pub c_spont: f64,
    /// Strength of the 0→0 Rayleigh line of the calibration molecule.
    pub s_ref: f64,
    /// Translational temperature at which the cavity target is met.
    pub t_ref: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTargets {
    /// 1/s
    pub cavity_rate: f64,
    /// 1/s
    pub spont_rate: f64,
}

impl CalibrationTargets {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        Ok(Self {
            cavity_rate: kv.f64_or("calib_cavity_rate_hz", 1.0e3)?,
            spont_rate: kv.f64_or("calib_spont_rate_hz", 1.5)?,
        })
    }
}

/// Equilibrium temperature of cavity cooling on the red side at δω = −κ,
/// ħκ/k_B.
pub fn linewidth_temperature(cavity: &CavitySpec) -> f64 {
    HBAR * cavity.kappa / K_B
}

/// The Rayleigh 0→0 line of `molecule`: its strength and branching fraction
/// out of the J = 0 level.
fn reference_line(molecule: &MoleculeConstants) -> (f64, f64) {
    let s00 = molecule.alpha_iso * molecule.alpha_iso;
    let s02 = molecule.alpha_aniso * molecule.alpha_aniso;
    (s00, s00 / (s00 + s02))
}

/// Fixes C_cav so the on-resonance Rayleigh 0→0 cavity rate equals the target
/// at the thermal momentum of the cavity-cooling limit, and C_spont so the
/// Rayleigh spontaneous rate equals its target.
pub fn calibrate(
    molecule: &MoleculeConstants,
    laser: &LaserSpec,
    cavity: &CavitySpec,
    targets: CalibrationTargets,
) -> Result<Calibration, RateError> {
    let (s_ref, beta) = reference_line(molecule);
    if !(s_ref > 0.0) {
        return Err(RateError::Calibration("reference line has zero strength".into()));
    }
    let t_ref = linewidth_temperature(cavity);
    let p = thermal_momentum(molecule.mass, t_ref);
    let gamma = pump_excitation(1.0 / beta, laser, molecule.gamma_eff, p, molecule.mass);
    let cav = cavity_emission_rate(gamma, cavity, beta, 0.0, p, molecule.mass, 1.0);
    let spont = spontaneous_raman_rate(gamma, beta, molecule.gamma_eff, 1.0);
    if !(cav > 0.0 && spont > 0.0) {
        return Err(RateError::Calibration(
            "uncalibrated reference rates vanish (zero coupling?)".into(),
        ));
    }
    Ok(Calibration {
        c_cav: targets.cavity_rate / cav,
        c_spont: targets.spont_rate / spont,
        s_ref,
        t_ref,
    })
}

/// The calibrated Rayleigh 0→0 rates (cavity on resonance, spontaneous) at
/// the reference temperature.
pub fn reference_rates(
    molecule: &MoleculeConstants,
    laser: &LaserSpec,
    cavity: &CavitySpec,
    cal: &Calibration,
) -> (f64, f64) {
    let s00 = molecule.alpha_iso * molecule.alpha_iso;
    let s02 = molecule.alpha_aniso * molecule.alpha_aniso;
    let beta = s00 / (s00 + s02);
    let p = thermal_momentum(molecule.mass, cal.t_ref);
    let gamma = pump_excitation(
        (s00 + s02) / cal.s_ref,
        laser,
        molecule.gamma_eff,
        p,
        molecule.mass,
    );
    (
        cavity_emission_rate(gamma, cavity, beta, 0.0, p, molecule.mass, cal.c_cav),
        spontaneous_raman_rate(gamma, beta, molecule.gamma_eff, cal.c_spont),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    pub min_kappa_ratio: f64,
    pub min_cooperativity: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            min_kappa_ratio: 10.0,
            min_cooperativity: 1.0,
        }
    }
}

impl RegimeThresholds {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        let d = Self::default();
        Ok(Self {
            min_kappa_ratio: kv.f64_or("min_kappa_ratio", d.min_kappa_ratio)?,
            min_cooperativity: kv.f64_or("min_cooperativity", d.min_cooperativity)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeEntry {
    pub name: &'static str,
    pub value: f64,
    pub threshold: Option<f64>,
}

impl RegimeEntry {
    /// `None` for informational entries.
    pub fn pass(&self) -> Option<bool> {
        self.threshold.map(|t| self.value >= t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    /// |gΩ_L/Δ| (rad/s)
    pub reabsorption_coupling: f64,
    pub entries: Vec<RegimeEntry>,
}

impl RegimeReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass() != Some(false))
    }

    pub fn get(&self, name: &str) -> Option<&RegimeEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

impl fmt::Display for RegimeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "|g*Omega/Delta| = 2pi x {:.4} Hz",
            units::rad_s_to_hz(self.reabsorption_coupling)
        )?;
        for e in &self.entries {
            let verdict = match e.pass() {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "info",
            };
            match e.threshold {
                Some(t) => writeln!(f, "{:<28} {:>12.4e}  (>= {t})  {verdict}", e.name, e.value)?,
                None => writeln!(f, "{:<28} {:>12.4e}  {verdict}", e.name, e.value)?,
            }
        }
        Ok(())
    }
}

pub fn regime_check(
    laser: &LaserSpec,
    cavity: &CavitySpec,
    molecule: &MoleculeConstants,
    thresholds: RegimeThresholds,
) -> RegimeReport {
    let reabs = (cavity.g * laser.rabi / laser.delta).abs();
    let kappa_ratio = if reabs > 0.0 {
        cavity.kappa / reabs
    } else {
        f64::INFINITY
    };
    let cooperativity = cavity.g * cavity.g / (molecule.gamma_eff * cavity.kappa);
    let recoil = HBAR * cavity.k * cavity.k / (2.0 * molecule.mass);
    RegimeReport {
        reabsorption_coupling: reabs,
        entries: vec![
            RegimeEntry {
                name: "kappa / |g*Omega/Delta|",
                value: kappa_ratio,
                threshold: Some(thresholds.min_kappa_ratio),
            },
            RegimeEntry {
                name: "cooperativity g^2/(Gamma*kappa)",
                value: cooperativity,
                threshold: Some(thresholds.min_cooperativity),
            },
            RegimeEntry {
                name: "recoil frequency / kappa",
                value: recoil / cavity.kappa,
                threshold: None,
            },
        ],
    }
}

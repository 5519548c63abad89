//! Ro-vibrational level structure, thermal populations and rotational Raman
//! line strengths.
//!
//! Levels are labelled by integer (v, J) in the electronic ground state. The
//! ΔJ = 0, ±2 selection rule of rotational Raman scattering splits the levels
//! into an even-J and an odd-J ladder that never exchange population.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::config::{ConfigError, KeyValues};
use crate::units::{self, AMU, HBAR, K_B};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MolError {
    #[error("invalid molecule constant: {0}")]
    InvalidConstant(String),
    #[error("no rotational constants supplied for v = {0}")]
    MissingVibrationalLevel(u32),
    #[error(
        "rotational energy is not increasing at v = {v}, J = {j}: centrifugal distortion \
         dominates (J(J+1) must stay below B/(2D) = {limit:.1})"
    )]
    NonMonotonic { v: u32, j: u32, limit: f64 },
    #[error("duplicate level (v = {v}, J = {j})")]
    DuplicateLevel { v: u32, j: u32 },
    #[error("level set is empty")]
    EmptyLevelSet,
    #[error("temperature must be non-negative, got {0}")]
    NegativeTemperature(f64),
    #[error("rotational Raman transitions need |ΔJ| ∈ {{0, 2}}, got {j} → {j_final}")]
    ForbiddenTransition { j: u32, j_final: u32 },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Spectroscopic constants of one molecule in its electronic ground state.
///
/// Spectroscopic terms are stored in 1/cm as they are read from the data
/// file; the polarizabilities share one arbitrary unit.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeConstants {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Rotational constant B_v, one entry per vibrational level (1/cm).
    pub rot_b: Vec<f64>,
    /// Centrifugal distortion D_v (1/cm); the last entry is reused for higher v.
    pub rot_d: Vec<f64>,
    pub omega_e: f64,
    pub omega_e_x_e: f64,
    /// Electronic term energy of the effective excited channel (1/cm).
    pub term_energy: f64,
    /// Effective excited-state linewidth Γ_eff (rad/s).
    pub gamma_eff: f64,
    pub alpha_iso: f64,
    pub alpha_aniso: f64,
    /// Ratio of the polarizability derivative to the polarizability, used
    /// for Δv = ±1 lines. Zero keeps them out of the line list.
    pub vib_factor: f64,
}

/// Shipped OH data file.
pub const OH_MOLECULE_FILE: &str = include_str!("../data/oh.mol");

impl MoleculeConstants {
    pub fn oh() -> Self {
        let kv = KeyValues::parse(OH_MOLECULE_FILE).expect("shipped molecule file parses");
        Self::from_key_values(&kv).expect("shipped molecule file is valid")
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self, MolError> {
        let rot_b = kv.f64_list("B_cm")?;
        let rot_d = kv.f64_list("D_cm")?;
        let c = Self {
            name: kv.raw("name").unwrap_or("molecule").to_string(),
            mass: kv.f64("mass_amu")? * AMU,
            rot_b,
            rot_d,
            omega_e: kv.f64("we_cm")?,
            omega_e_x_e: kv.f64("wexe_cm")?,
            term_energy: kv.f64("Te_cm")?,
            gamma_eff: units::hz_to_rad_s(kv.f64("gamma_eff_hz")?),
            alpha_iso: kv.f64("alpha_iso")?,
            alpha_aniso: kv.f64("alpha_aniso")?,
            vib_factor: kv.f64_or("vib_factor", 0.0)?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), MolError> {
        let bad = |what: &str| Err(MolError::InvalidConstant(what.to_string()));
        if !(self.mass > 0.0) {
            return bad("mass must be positive");
        }
        if self.rot_b.is_empty() || self.rot_b.iter().any(|&b| !(b > 0.0)) {
            return bad("every B_v must be positive");
        }
        if self.rot_d.is_empty() || self.rot_d.iter().any(|&d| !(d >= 0.0)) {
            return bad("every D_v must be non-negative");
        }
        if !(self.term_energy > 0.0) {
            return bad("T_e must be positive");
        }
        if !(self.gamma_eff > 0.0) {
            return bad("gamma_eff must be positive");
        }
        if self.alpha_iso < 0.0 || self.alpha_aniso < 0.0 || self.vib_factor < 0.0 {
            return bad("polarizability inputs must be non-negative");
        }
        Ok(())
    }

    /// Copy with both polarizability components multiplied by `factor`.
    pub fn with_polarizability_scale(&self, factor: f64) -> Self {
        Self {
            alpha_iso: self.alpha_iso * factor,
            alpha_aniso: self.alpha_aniso * factor,
            ..self.clone()
        }
    }

    fn b(&self, v: u32) -> Result<f64, MolError> {
        self.rot_b
            .get(v as usize)
            .copied()
            .ok_or(MolError::MissingVibrationalLevel(v))
    }

    fn d(&self, v: u32) -> f64 {
        *self
            .rot_d
            .get(v as usize)
            .unwrap_or_else(|| self.rot_d.last().expect("validated non-empty"))
    }

    /// Vibrational term G(v) in 1/cm.
    fn vib_term(&self, v: u32) -> f64 {
        let x = v as f64 + 0.5;
        self.omega_e * x - self.omega_e_x_e * x * x
    }

    /// Rotational term F_v(J) in 1/cm.
    fn rot_term(&self, v: u32, j: u32) -> Result<f64, MolError> {
        let n = (j as f64) * (j as f64 + 1.0);
        Ok(self.b(v)? * n - self.d(v) * n * n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ladder {
    Even,
    Odd,
}

impl Ladder {
    pub fn of(j: u32) -> Self {
        if j.is_multiple_of(2) {
            Ladder::Even
        } else {
            Ladder::Odd
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoVibLevel {
    pub v: u32,
    pub j: u32,
    /// rad/s above (v = 0, J = 0)
    pub energy: f64,
}

impl RoVibLevel {
    pub fn degeneracy(&self) -> f64 {
        (2 * self.j + 1) as f64
    }

    pub fn ladder(&self) -> Ladder {
        Ladder::of(self.j)
    }

    pub fn label(&self) -> String {
        format!("v{}J{}", self.v, self.j)
    }
}

/// Levels sorted by energy with a (v, J) lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    levels: Vec<RoVibLevel>,
    index: BTreeMap<(u32, u32), usize>,
}

impl LevelSet {
    pub fn new(mut levels: Vec<RoVibLevel>) -> Result<Self, MolError> {
        levels.sort_by(|a, b| {
            a.energy
                .total_cmp(&b.energy)
                .then((a.v, a.j).cmp(&(b.v, b.j)))
        });
        let mut index = BTreeMap::new();
        for (i, l) in levels.iter().enumerate() {
            if index.insert((l.v, l.j), i).is_some() {
                return Err(MolError::DuplicateLevel { v: l.v, j: l.j });
            }
        }
        Ok(Self { levels, index })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[RoVibLevel] {
        &self.levels
    }

    pub fn get(&self, i: usize) -> &RoVibLevel {
        &self.levels[i]
    }

    pub fn position(&self, v: u32, j: u32) -> Option<usize> {
        self.index.get(&(v, j)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RoVibLevel> {
        self.levels.iter()
    }
}

/// Builds every level with 0 ≤ v ≤ `v_max` and 0 ≤ J ≤ `j_max` from the
/// anharmonic-oscillator / non-rigid-rotor term expansion.
pub fn build_levels(c: &MoleculeConstants, v_max: u32, j_max: u32) -> Result<LevelSet, MolError> {
    c.validate()?;
    let g0 = c.vib_term(0);
    let mut levels = Vec::with_capacity(((v_max + 1) * (j_max + 1)) as usize);
    for v in 0..=v_max {
        let b = c.b(v)?;
        let d = c.d(v);
        let mut prev = f64::NEG_INFINITY;
        for j in 0..=j_max {
            let f = c.rot_term(v, j)?;
            if f <= prev {
                let limit = if d > 0.0 { b / (2.0 * d) } else { f64::INFINITY };
                return Err(MolError::NonMonotonic { v, j, limit });
            }
            prev = f;
            let cm = c.vib_term(v) - g0 + f;
            levels.push(RoVibLevel {
                v,
                j,
                energy: units::wavenumber_to_rad_s(cm),
            });
        }
    }
    LevelSet::new(levels)
}

/// Normalized thermal populations P ∝ (2J+1)·exp(−E/k_B T).
pub fn boltzmann_populations(levels: &LevelSet, t: f64) -> Result<Vec<f64>, MolError> {
    if levels.is_empty() {
        return Err(MolError::EmptyLevelSet);
    }
    if !(t >= 0.0) {
        return Err(MolError::NegativeTemperature(t));
    }
    let e_min = levels
        .iter()
        .map(|l| l.energy)
        .fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = if t == 0.0 {
        levels
            .iter()
            .map(|l| if l.energy == e_min { l.degeneracy() } else { 0.0 })
            .collect()
    } else {
        let beta = HBAR / (K_B * t);
        levels
            .iter()
            .map(|l| l.degeneracy() * (-(l.energy - e_min) * beta).exp())
            .collect()
    };
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// Placzek-Teller coefficient b(J → J') for the rotational Raman branches.
///
/// For each J the three branches sum to one.
pub fn placzek_teller(j: u32, j_final: u32) -> Result<f64, MolError> {
    let jf = j as f64;
    let b = if j_final + 2 == j {
        3.0 * jf * (jf - 1.0) / (2.0 * (2.0 * jf + 1.0) * (2.0 * jf - 1.0))
    } else if j_final == j {
        jf * (jf + 1.0) / ((2.0 * jf - 1.0) * (2.0 * jf + 3.0))
    } else if j_final == j + 2 {
        3.0 * (jf + 1.0) * (jf + 2.0) / (2.0 * (2.0 * jf + 1.0) * (2.0 * jf + 3.0))
    } else {
        return Err(MolError::ForbiddenTransition { j, j_final });
    };
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LineKind {
    Rayleigh,
    Stokes,
    AntiStokes,
}

impl LineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LineKind::Rayleigh => "rayleigh",
            LineKind::Stokes => "stokes",
            LineKind::AntiStokes => "anti_stokes",
        }
    }
}

impl fmt::Display for LineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A two-photon transition between two levels of a [`LevelSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanLine {
    pub from: usize,
    pub to: usize,
    /// E_from − E_to in rad/s; positive for anti-Stokes lines.
    pub shift: f64,
    pub kind: LineKind,
    /// Relative strength in squared polarizability units.
    pub strength: f64,
}

impl RamanLine {
    pub fn label(&self, levels: &LevelSet) -> String {
        format!(
            "{}->{}",
            levels.get(self.from).label(),
            levels.get(self.to).label()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineOptions {
    /// Enumerate Δv = ±1 lines in addition to pure rotational ones.
    pub vibrational: bool,
}

impl LineOptions {
    pub fn for_molecule(c: &MoleculeConstants) -> Self {
        Self {
            vibrational: c.vib_factor > 0.0,
        }
    }
}

/// Every allowed ordered level pair with ΔJ ∈ {0, ±2}, ordered by
/// (from, to) index.
pub fn enumerate_lines(levels: &LevelSet, c: &MoleculeConstants, opts: LineOptions) -> Vec<RamanLine> {
    let iso2 = c.alpha_iso * c.alpha_iso;
    let aniso2 = c.alpha_aniso * c.alpha_aniso;
    let vib2 = c.vib_factor * c.vib_factor;
    let mut lines = Vec::new();
    for (i, a) in levels.iter().enumerate() {
        for (f, b) in levels.iter().enumerate() {
            let dv = a.v.abs_diff(b.v);
            if dv > 1 || (dv == 1 && !opts.vibrational) {
                continue;
            }
            let Ok(pt) = placzek_teller(a.j, b.j) else {
                continue;
            };
            let mut s = pt * aniso2;
            if a.j == b.j {
                s += iso2;
            }
            if dv == 1 {
                s *= vib2 * a.v.max(b.v) as f64;
            }
            let shift = if i == f { 0.0 } else { a.energy - b.energy };
            let kind = if i == f {
                LineKind::Rayleigh
            } else if shift > 0.0 {
                LineKind::AntiStokes
            } else {
                LineKind::Stokes
            };
            lines.push(RamanLine {
                from: i,
                to: f,
                shift,
                kind,
                strength: s,
            });
        }
    }
    lines
}

/// Σ of line strengths leaving each level.
pub fn total_strengths(lines: &[RamanLine], n_levels: usize) -> Vec<f64> {
    let mut tot = vec![0.0; n_levels];
    for l in lines {
        tot[l.from] += l.strength;
    }
    tot
}

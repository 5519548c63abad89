//! Physical constants (CODATA 2018) and the unit conversions used at module
//! boundaries.
//!
//! Spectroscopic inputs arrive in 1/cm, every internal frequency is an angular
//! frequency in rad/s, and anything written for a user is in Hz.

use std::f64::consts::PI;

/// Reduced Planck constant (J·s)
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant (J/K)
pub const K_B: f64 = 1.380_649e-23;

/// Speed of light in vacuum (m/s)
pub const C: f64 = 299_792_458.0;

/// Atomic mass constant (kg)
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Angular frequency of one wavenumber: 2π·c·(100 cm/m).
pub const RAD_PER_S_PER_WAVENUMBER: f64 = 2.0 * PI * C * 100.0;

pub fn wavenumber_to_rad_s(cm: f64) -> f64 {
    cm * RAD_PER_S_PER_WAVENUMBER
}

pub fn rad_s_to_wavenumber(omega: f64) -> f64 {
    omega / RAD_PER_S_PER_WAVENUMBER
}

pub fn hz_to_rad_s(hz: f64) -> f64 {
    2.0 * PI * hz
}

pub fn rad_s_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// Temperature equivalent of an angular frequency, ħω/k_B.
pub fn rad_s_to_kelvin(omega: f64) -> f64 {
    HBAR * omega / K_B
}

/// Temperature of a mean 1-D kinetic energy, T = 2E/k_B.
pub fn energy_1d_to_kelvin(energy: f64) -> f64 {
    2.0 * energy / K_B
}

/// Mean 1-D kinetic energy at temperature T, E = k_B·T/2.
pub fn kelvin_to_energy_1d(t: f64) -> f64 {
    0.5 * K_B * t
}

/// Vacuum wavevector magnitude for a wavelength in metres.
pub fn wavenumber_of_wavelength(wavelength: f64) -> f64 {
    2.0 * PI / wavelength
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_round_trip() {
        let w = wavenumber_to_rad_s(18.55);
        assert!((rad_s_to_wavenumber(w) - 18.55).abs() < 1e-12);
        // 1 cm⁻¹ ≈ 29.979 GHz
        assert!((rad_s_to_hz(wavenumber_to_rad_s(1.0)) - 29.979_245_8e9).abs() < 1.0);
    }

    #[test]
    fn linewidth_temperature() {
        // ħκ/k_B for κ = 2π × 75 kHz is about 3.6 µK
        let t = rad_s_to_kelvin(hz_to_rad_s(75e3));
        assert!((t - 3.6e-6).abs() < 0.05e-6, "{t}");
    }
}

//! Physical constants (CODATA 2018, SI) and unit helpers.
//!
//! Frequencies, detunings and couplings are angular (rad/s) everywhere in
//! the crate; rates are 1/s; spectral densities are per rad/s. The helpers
//! below convert from the "value / 2π" numbers quoted on lab benches.

use std::f64::consts::PI;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Superconducting flux quantum h / 2e.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

pub const TWO_PI: f64 = 2.0 * PI;

/// Ordinary frequency (Hz) to angular frequency (rad/s).
#[inline]
pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}

#[inline]
pub fn khz(f: f64) -> f64 {
    hz(f * 1e3)
}

#[inline]
pub fn mhz(f: f64) -> f64 {
    hz(f * 1e6)
}

#[inline]
pub fn ghz(f: f64) -> f64 {
    hz(f * 1e9)
}

/// Angular frequency (rad/s) back to Hz.
#[inline]
pub fn to_hz(omega: f64) -> f64 {
    omega / TWO_PI
}

/// Density per Hz of ordinary frequency to density per rad/s.
#[inline]
pub fn density_per_hz_to_angular(rho_hz: f64) -> f64 {
    rho_hz / TWO_PI
}

#[inline]
pub fn density_angular_to_per_hz(rho: f64) -> f64 {
    rho * TWO_PI
}

/// Rate (1/s) of a lifetime given in seconds.
#[inline]
pub fn rate_from_lifetime(tau: f64) -> f64 {
    1.0 / tau
}

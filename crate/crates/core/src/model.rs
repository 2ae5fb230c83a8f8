//! Domain types and closed-form decay-rate formulas.
//!
//! A qubit with intrinsic decay `gamma_q` exchanges energy incoherently with
//! each TLS `k` at the Lorentzian rate
//! `2 g_k² Γm / (Γm² + Δ_k²)`, where `Γm = (gamma_q + gamma_t_k) / 2`.
//! For an equally spaced comb of identical TLSs the infinite sum has a closed
//! form with two asymptotes: a dense (Fermi) limit independent of the TLS
//! lifetime and a sparse (Purcell) limit proportional to the TLS decay rate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::units::{FLUX_QUANTUM, HBAR, PLANCK, TWO_PI};

/// Default thermal excited-state population of the qubit and its bath.
pub const DEFAULT_P_TH: f64 = 0.028;

/// Default half-width (in comb indices) used when a comb is materialized.
pub const DEFAULT_COMB_TRUNCATION: usize = 10_000;

/// Transmon limit below which `E_J / E_C` is flagged.
pub const TRANSMON_LIMIT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    /// Qubit angular frequency (rad/s).
    pub omega_q: f64,
    /// Intrinsic (non-TLS) decay rate (1/s).
    pub gamma_q: f64,
    /// Thermal excited-state population shared by qubit and bath.
    pub p_th: f64,
    /// Readout resonator angular frequency (rad/s).
    pub omega_r: f64,
    /// Readout resonator decay rate (1/s).
    pub kappa_r: f64,
    /// Qubit-resonator coupling (rad/s).
    pub g_r: f64,
}

impl QubitParams {
    /// A qubit with no readout resonator and the default thermal population.
    pub fn new(omega_q: f64, gamma_q: f64) -> Self {
        Self {
            omega_q,
            gamma_q,
            p_th: DEFAULT_P_TH,
            omega_r: 0.0,
            kappa_r: 0.0,
            g_r: 0.0,
        }
    }

    pub fn with_p_th(mut self, p_th: f64) -> Self {
        self.p_th = p_th;
        self
    }

    pub fn with_readout(mut self, omega_r: f64, kappa_r: f64, g_r: f64) -> Self {
        self.omega_r = omega_r;
        self.kappa_r = kappa_r;
        self.g_r = g_r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_q > 0.0) || !self.omega_q.is_finite() {
            return Err(domain(format!("omega_q must be > 0, got {}", self.omega_q)));
        }
        for (name, v) in [
            ("gamma_q", self.gamma_q),
            ("kappa_r", self.kappa_r),
            ("g_r", self.g_r),
            ("omega_r", self.omega_r),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(0.0..0.5).contains(&self.p_th) {
            return Err(domain(format!("p_th must lie in [0, 0.5), got {}", self.p_th)));
        }
        Ok(())
    }
}

/// A single two-level system seen from the qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tls {
    /// Detuning from the qubit (rad/s, signed).
    pub delta: f64,
    /// Transverse coupling (rad/s).
    pub g: f64,
    /// Intrinsic relaxation rate (1/s).
    pub gamma_t: f64,
    /// Excited-state population.
    pub p: f64,
}

impl Tls {
    pub fn new(delta: f64, g: f64, gamma_t: f64, p: f64) -> Self {
        Self { delta, g, gamma_t, p }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() {
            return Err(domain("TLS detuning must be finite"));
        }
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(domain(format!("TLS coupling must be >= 0, got {}", self.g)));
        }
        if !(self.gamma_t >= 0.0) || !self.gamma_t.is_finite() {
            return Err(domain(format!("TLS decay rate must be >= 0, got {}", self.gamma_t)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(domain(format!("TLS population must lie in [0, 1], got {}", self.p)));
        }
        Ok(())
    }

    /// Purcell exchange rate with a qubit of intrinsic decay `gamma_q`.
    pub fn purcell_rate(&self, gamma_q: f64) -> Result<f64> {
        purcell_rate(self.g, mutual_decoherence(gamma_q, self.gamma_t), self.delta)
    }
}

/// Identical TLSs placed at detunings `k * spacing - offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformComb {
    /// Comb period Δ (rad/s).
    pub spacing: f64,
    /// Offset Δ₀ of the comb with respect to the qubit (rad/s).
    pub offset: f64,
    pub g: f64,
    pub gamma_t: f64,
    /// Half-width H, in comb indices, used by [`UniformComb::materialize`].
    pub truncation: usize,
}

impl UniformComb {
    /// A comb with the qubit centred between two neighbouring TLSs.
    pub fn centered(spacing: f64, g: f64, gamma_t: f64) -> Self {
        Self {
            spacing,
            offset: 0.5 * spacing,
            g,
            gamma_t,
            truncation: DEFAULT_COMB_TRUNCATION,
        }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_truncation(mut self, truncation: usize) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(domain(format!("comb spacing must be > 0, got {}", self.spacing)));
        }
        if !(0.0..=0.5 * self.spacing).contains(&self.offset) {
            return Err(domain(format!(
                "comb offset must lie in [0, spacing/2], got {} for spacing {}",
                self.offset, self.spacing
            )));
        }
        Tls::new(0.0, self.g, self.gamma_t, 0.0).validate()
    }

    /// TLS density per rad/s.
    pub fn density(&self) -> f64 {
        1.0 / self.spacing
    }

    /// The `(a, b, c)` parameters of the closed-form sum for a qubit with
    /// intrinsic decay `gamma_q`.
    pub fn closed_form_params(&self, gamma_q: f64) -> Result<(f64, f64, f64)> {
        let gamma_m = mutual_decoherence(gamma_q, self.gamma_t);
        if !(gamma_m > 0.0) {
            return Err(domain("comb sum requires a non-zero mutual decoherence rate"));
        }
        Ok((
            2.0 * self.g * self.g / gamma_m,
            gamma_m / self.spacing,
            self.offset / gamma_m,
        ))
    }

    /// Closed-form TLS-induced decay rate of the infinite comb.
    pub fn decay_rate(&self, gamma_q: f64) -> Result<f64> {
        let (a, b, c) = self.closed_form_params(gamma_q)?;
        comb_sum_closed_form(a, b, c)
    }

    /// Explicit TLS list for `|k| <= truncation`, all at population `p`.
    pub fn materialize(&self, p: f64) -> Vec<Tls> {
        let h = self.truncation as i64;
        (-h..=h)
            .map(|k| Tls::new(k as f64 * self.spacing - self.offset, self.g, self.gamma_t, p))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TlsEnsemble {
    Explicit(Vec<Tls>),
    Comb(UniformComb),
}

impl TlsEnsemble {
    pub fn empty() -> Self {
        TlsEnsemble::Explicit(Vec::new())
    }

    /// Explicit list; combs are materialized at population `p`.
    pub fn to_tls(&self, p: f64) -> Vec<Tls> {
        match self {
            TlsEnsemble::Explicit(list) => list.clone(),
            TlsEnsemble::Comb(comb) => comb.materialize(p),
        }
    }
}

/// Incoherent Purcell exchange rate `2 g² Γm / (Γm² + Δ²)`.
pub fn purcell_rate(g: f64, gamma_m: f64, delta: f64) -> Result<f64> {
    if !(gamma_m > 0.0) {
        return Err(domain(format!(
            "Purcell rate needs a positive mutual decoherence rate, got {gamma_m}"
        )));
    }
    Ok(2.0 * g * g * gamma_m / (gamma_m * gamma_m + delta * delta))
}

/// Mutual decoherence rate `(gamma_q + gamma_t) / 2`.
#[inline]
pub fn mutual_decoherence(gamma_q: f64, gamma_t: f64) -> f64 {
    0.5 * (gamma_q + gamma_t)
}

/// Total qubit decay rate: intrinsic rate plus the Purcell sum over the bath.
///
/// Combs are materialized with their own truncation before summing; use
/// [`UniformComb::decay_rate`] for the untruncated closed form.
pub fn total_decay_rate(qubit: &QubitParams, bath: &TlsEnsemble) -> Result<f64> {
    let tls_sum = match bath {
        TlsEnsemble::Explicit(list) => explicit_sum(qubit.gamma_q, list)?,
        TlsEnsemble::Comb(comb) => explicit_sum(qubit.gamma_q, &comb.materialize(qubit.p_th))?,
    };
    Ok(qubit.gamma_q + tls_sum)
}

fn explicit_sum(gamma_q: f64, list: &[Tls]) -> Result<f64> {
    list.iter().map(|t| t.purcell_rate(gamma_q)).sum()
}

/// Closed-form sum of `a b² / (b² + (h - b c)²)` over all integers `h`:
/// `π a b sinh(2πb) / (cosh(2πb) - cos(2πbc))`.
pub fn comb_sum_closed_form(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(domain(format!("comb sum needs b > 0, got {b}")));
    }
    if !(a >= 0.0) {
        return Err(domain(format!("comb sum needs a >= 0, got {a}")));
    }
    if !c.is_finite() {
        return Err(domain("comb offset parameter c must be finite"));
    }
    Ok(PI * a * b * comb_kernel(TWO_PI * b, b * c))
}

/// `sinh(x) / (cosh(x) - cos(2π s))`, evaluated without cancellation.
fn comb_kernel(x: f64, s: f64) -> f64 {
    // Reduce the offset into one period before taking the sine.
    let s = s - s.round();
    if x > 20.0 {
        // cosh(x) - cos(y) has no cancellation here; tanh(x) == 1 to rounding.
        return x.tanh() / (1.0 - (TWO_PI * s).cos() / x.cosh());
    }
    // cosh x - cos y = 2 sinh²(x/2) + 2 sin²(y/2), sinh x = 2 sinh(x/2) cosh(x/2)
    let h = 0.5 * x;
    let (sh, ch) = (h.sinh(), h.cosh());
    let sn = (PI * s).sin();
    sh * ch / (sh * sh + sn * sn)
}

/// Dense-bath (Fermi golden rule) rate `2π g² ρ`, with `rho` per rad/s.
pub fn fermi_rate(g: f64, rho: f64) -> f64 {
    TWO_PI * g * g * rho
}

/// Sparse-bath (Purcell formula) rate `(g / Δ₀)² Γt`.
pub fn purcell_limit_rate(g: f64, delta_0: f64, gamma_t: f64) -> Result<f64> {
    if delta_0 == 0.0 || !delta_0.is_finite() {
        return Err(domain(
            "Purcell-limit formula needs a non-zero detuning; use purcell_rate on resonance",
        ));
    }
    let ratio = g / delta_0;
    Ok(ratio * ratio * gamma_t)
}

/// Qubit decay through the readout resonator, `(g_r / (ω_r - ω))² κ_r`.
pub fn readout_purcell(qubit: &QubitParams, omega: f64) -> Result<f64> {
    let detuning = qubit.omega_r - omega;
    if detuning == 0.0 {
        return Err(domain("qubit is resonant with the readout resonator"));
    }
    let ratio = qubit.g_r / detuning;
    Ok(ratio * ratio * qubit.kappa_r)
}

/// Parallel-plate merged-element transmon with unit dielectric participation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergemonGeometry {
    /// Junction area (m²).
    pub area: f64,
    /// Dielectric thickness (m).
    pub thickness: f64,
    /// Volumetric TLS density (1 / (m³ Hz)).
    pub rho0: f64,
    /// TLS dipole moment (C m).
    pub dipole: f64,
    /// Dielectric permittivity (F/m).
    pub permittivity: f64,
    /// Qubit capacitance (F).
    pub capacitance: f64,
    /// Zero-point voltage fluctuation (V).
    pub v_zpf: f64,
}

impl MergemonGeometry {
    /// Al/AlOx/Al reference device: 1.4 µm² junction, 2 nm oxide,
    /// ρ₀ = 100 /µm³/GHz, p = 0.2 e·Å, ε = 10 ε₀, C = 70 fF, with the
    /// zero-point voltage of a 3.8 GHz qubit on that capacitance.
    pub fn reference() -> Self {
        use crate::units::{ghz, ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY};
        let capacitance = 70e-15;
        Self {
            area: 1.4e-12,
            thickness: 2e-9,
            rho0: 100.0 / (1e-18 * 1e9),
            dipole: 0.2 * ELEMENTARY_CHARGE * 1e-10,
            permittivity: 10.0 * VACUUM_PERMITTIVITY,
            capacitance,
            v_zpf: zero_point_voltage(ghz(3.8), capacitance),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("area", self.area),
            ("thickness", self.thickness),
            ("rho0", self.rho0),
            ("dipole", self.dipole),
            ("permittivity", self.permittivity),
            ("capacitance", self.capacitance),
            ("v_zpf", self.v_zpf),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(format!("geometry field {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// `ρ g²` at fixed capacitance: `ρ₀ C V² p² / (ε ħ²)`, in rad²/s² per Hz.
    pub fn density_coefficient(&self) -> f64 {
        self.rho0 * self.capacitance * self.v_zpf * self.v_zpf * self.dipole * self.dipole
            / (self.permittivity * HBAR * HBAR)
    }

    /// Coupling `p E / ħ` with `E = V_zpf / d` (rad/s).
    pub fn coupling(&self) -> f64 {
        self.dipole * self.v_zpf / (self.thickness * HBAR)
    }

    /// Direct volume count `ρ₀ A d` (per Hz).
    pub fn volume_density(&self) -> f64 {
        self.rho0 * self.area * self.thickness
    }
}

/// Zero-point voltage `sqrt(ħω / 2C)` of an LC mode.
pub fn zero_point_voltage(omega: f64, capacitance: f64) -> f64 {
    (HBAR * omega / (2.0 * capacitance)).sqrt()
}

/// TLS density per Hz implied by coupling `g` (rad/s) at fixed capacitance.
pub fn mergemon_density(g: f64, geometry: &MergemonGeometry) -> Result<f64> {
    geometry.validate()?;
    if !(g > 0.0) {
        return Err(domain(format!("coupling must be > 0, got {g}")));
    }
    Ok(geometry.density_coefficient() / (g * g))
}

/// Transmon parameters inferred from measured spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonSpec {
    pub ej_over_h: f64,
    pub ec_over_h: f64,
    /// Anharmonicity (rad/s, negative).
    pub alpha: f64,
    /// Dispersive shift (rad/s).
    pub chi: f64,
    /// Qubit-readout coupling from the dispersive relation (rad/s).
    pub g_r: f64,
    /// Lamb shift `g_r² / Δ` implied by `g_r` (rad/s).
    pub lamb: f64,
    /// Transmon impedance (ohm).
    pub z_t: f64,
    /// Zero-point voltage at the qubit frequency (V).
    pub v_zpf: f64,
    /// `false` when `E_J / E_C` is below [`TRANSMON_LIMIT`].
    pub transmon_regime: bool,
}

pub fn transmon_derive(omega_q: f64, alpha: f64, chi: f64, omega_r: f64) -> Result<TransmonSpec> {
    if !(alpha < 0.0) {
        return Err(domain(format!("anharmonicity must be negative, got {alpha}")));
    }
    if !(omega_q > 0.0) {
        return Err(domain("qubit frequency must be positive"));
    }
    let detuning = omega_q - omega_r;
    if detuning == 0.0 {
        return Err(domain("qubit and readout resonator must be detuned"));
    }
    let ec_over_h = -alpha / TWO_PI;
    let fq = omega_q / TWO_PI;
    let ej_over_h = (fq + ec_over_h).powi(2) / (8.0 * ec_over_h);

    let radicand = -detuning * chi * (1.0 + detuning / alpha);
    if !(radicand >= 0.0) {
        return Err(domain(format!(
            "dispersive relation has no real coupling for chi={chi}, detuning={detuning}"
        )));
    }
    let g_r = radicand.sqrt();

    let (ec, ej) = (PLANCK * ec_over_h, PLANCK * ej_over_h);
    let z_t = FLUX_QUANTUM / (PI * crate::units::ELEMENTARY_CHARGE) * (ec / (2.0 * ej)).sqrt();
    let v_zpf = omega_q * (HBAR * z_t / 2.0).sqrt();

    Ok(TransmonSpec {
        ej_over_h,
        ec_over_h,
        alpha,
        chi,
        g_r,
        lamb: g_r * g_r / detuning,
        z_t,
        v_zpf,
        transmon_regime: ej_over_h / ec_over_h >= TRANSMON_LIMIT,
    })
}

/// Coupling implied by a measured Lamb shift `Λ = g² / Δ`.
pub fn coupling_from_lamb_shift(lamb: f64, omega_q: f64, omega_r: f64) -> f64 {
    (lamb * (omega_q - omega_r)).abs().sqrt()
}

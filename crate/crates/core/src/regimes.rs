//! Qubit lifetime maps over coupling and TLS lifetime, and the
//! frequency-dependent lifetime model around a phononic band edge.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{
    comb_sum_closed_form, mergemon_density, mutual_decoherence, readout_purcell,
    MergemonGeometry, QubitParams, UniformComb,
};
use crate::units::{density_per_hz_to_angular, TWO_PI};

/// `b = Γm ρ` above which a bath is dense.
pub const FERMI_THRESHOLD: f64 = 1.0;
/// `b = Γm ρ` below which a bath is sparse.
pub const PURCELL_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Fermi,
    Purcell,
    Crossover,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Fermi => "fermi",
            Regime::Purcell => "purcell",
            Regime::Crossover => "crossover",
        }
    }
}

/// Classifies by `b = Γm ρ`, `rho` per rad/s. The qubit linewidth entering
/// `Γm` is its intrinsic decay plus the golden-rule TLS decay `2π g² ρ`, so a
/// qubit whose own TLS-induced broadening spans many TLSs counts as dense
/// even when `gamma_q` and `gamma_t` alone are narrow.
pub fn regime_classify(g: f64, gamma_t: f64, rho: f64, gamma_q: f64) -> Result<Regime> {
    if !(g >= 0.0 && gamma_t >= 0.0 && rho > 0.0 && gamma_q >= 0.0) {
        return Err(domain("regime classification needs non-negative rates and rho > 0"));
    }
    let linewidth = gamma_q + TWO_PI * g * g * rho;
    let b = mutual_decoherence(linewidth, gamma_t) * rho;
    Ok(if b > FERMI_THRESHOLD {
        Regime::Fermi
    } else if b < PURCELL_THRESHOLD {
        Regime::Purcell
    } else {
        Regime::Crossover
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum DensityLaw {
    /// Constant density per rad/s.
    Fixed { rho: f64 },
    /// `ρ ∝ 1/g²` at fixed capacitance.
    Mergemon { geometry: MergemonGeometry },
}

impl DensityLaw {
    /// Density per rad/s at coupling `g`.
    pub fn rho(&self, g: f64) -> Result<f64> {
        match self {
            DensityLaw::Fixed { rho } => Ok(*rho),
            DensityLaw::Mergemon { geometry } => {
                Ok(density_per_hz_to_angular(mergemon_density(g, geometry)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum OffsetPolicy {
    /// Qubit halfway between two TLSs.
    Midpoint,
    /// `Δ₀ = fraction · Δ`, with `fraction` in `[0, 1/2]`.
    Fraction { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    /// Couplings (rad/s).
    pub g_grid: Vec<f64>,
    /// TLS relaxation rates (1/s).
    pub gamma_t_grid: Vec<f64>,
    pub density: DensityLaw,
    pub offset: OffsetPolicy,
    /// Also report the lifetime averaged uniformly over the comb offset.
    pub average_offset: bool,
    pub gamma_q: f64,
}

/// `n` points from `lo` to `hi`, evenly spaced in log.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

impl MapSpec {
    /// 100 × 100 log grid, `1/Γt` from 10 ns to 10 ms and `g/2π` from
    /// 10 kHz to 100 MHz, for the reference merged-element geometry.
    pub fn merged_element_default() -> Self {
        Self {
            g_grid: log_space(TWO_PI * 1e4, TWO_PI * 1e8, 100),
            gamma_t_grid: log_space(1.0 / 1e-8, 1.0 / 1e-2, 100),
            density: DensityLaw::Mergemon { geometry: MergemonGeometry::reference() },
            offset: OffsetPolicy::Midpoint,
            average_offset: false,
            gamma_q: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.g_grid.is_empty() || self.gamma_t_grid.is_empty() {
            return Err(domain("map grids must be non-empty"));
        }
        if self.g_grid.iter().chain(&self.gamma_t_grid).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(domain("map grid values must be finite and > 0"));
        }
        if !(self.gamma_q >= 0.0) {
            return Err(domain("gamma_q must be >= 0"));
        }
        if let OffsetPolicy::Fraction { fraction } = self.offset {
            if !(0.0..=0.5).contains(&fraction) {
                return Err(domain("offset fraction must lie in [0, 1/2]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub g: f64,
    pub gamma_t: f64,
    /// Density per rad/s.
    pub rho: f64,
    /// `Γm ρ`
    pub b: f64,
    pub inv_gamma_1: f64,
    /// Lifetime averaged over the comb offset, when requested.
    pub inv_gamma_1_avg: Option<f64>,
    pub regime: Regime,
}

/// Cells in row-major order: `g` outer, `gamma_t` inner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeMap {
    pub n_g: usize,
    pub n_gamma_t: usize,
    pub cells: Vec<MapCell>,
}

impl LifetimeMap {
    pub fn cell(&self, i_g: usize, i_t: usize) -> &MapCell {
        &self.cells[i_g * self.n_gamma_t + i_t]
    }
}

fn comb_rate(g: f64, gamma_t: f64, rho: f64, offset_fraction: f64, gamma_q: f64) -> Result<f64> {
    let spacing = 1.0 / rho;
    let comb = UniformComb::centered(spacing, g, gamma_t).with_offset(offset_fraction * spacing);
    comb.decay_rate(gamma_q)
}

/// `1/Γ₁` for a comb at one point of the map.
pub fn cell_lifetime(spec: &MapSpec, g: f64, gamma_t: f64) -> Result<MapCell> {
    let rho = spec.density.rho(g)?;
    let fraction = match spec.offset {
        OffsetPolicy::Midpoint => 0.5,
        OffsetPolicy::Fraction { fraction } => fraction,
    };
    let gamma_1 = spec.gamma_q + comb_rate(g, gamma_t, rho, fraction, spec.gamma_q)?;
    let inv_gamma_1_avg = if spec.average_offset {
        Some(offset_averaged_lifetime(g, gamma_t, rho, spec.gamma_q)?)
    } else {
        None
    };
    Ok(MapCell {
        g,
        gamma_t,
        rho,
        b: mutual_decoherence(spec.gamma_q, gamma_t) * rho,
        inv_gamma_1: 1.0 / gamma_1,
        inv_gamma_1_avg,
        regime: regime_classify(g, gamma_t, rho, spec.gamma_q)?,
    })
}

/// Mean of `1/Γ₁` over offsets `Δ₀ ∈ [0, Δ/2]`, by adaptive Simpson
/// quadrature in the offset fraction.
pub fn offset_averaged_lifetime(g: f64, gamma_t: f64, rho: f64, gamma_q: f64) -> Result<f64> {
    let gamma_m = mutual_decoherence(gamma_q, gamma_t);
    if !(gamma_m > 0.0) {
        return Err(domain("offset average needs a non-zero mutual decoherence rate"));
    }
    let (a, b) = (2.0 * g * g / gamma_m, gamma_m * rho);
    // The fraction x maps to c = x / b.
    let f = |x: f64| -> f64 {
        let rate = comb_sum_closed_form(a, b, x / b).unwrap_or(f64::INFINITY);
        1.0 / (gamma_q + rate)
    };
    let integral = adaptive_simpson(&f, 0.0, 0.5, 1e-12, 50);
    Ok(2.0 * integral)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol * whole.abs().max(f64::MIN_POSITIVE), depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Evaluates every cell in parallel. The result does not depend on the
/// number of worker threads.
pub fn lifetime_map(spec: &MapSpec) -> Result<LifetimeMap> {
    spec.validate()?;
    let n_t = spec.gamma_t_grid.len();
    let cells = (0..spec.g_grid.len() * n_t)
        .into_par_iter()
        .map(|i| cell_lifetime(spec, spec.g_grid[i / n_t], spec.gamma_t_grid[i % n_t]))
        .collect::<Result<Vec<_>>>()?;
    Ok(LifetimeMap { n_g: spec.g_grid.len(), n_gamma_t: n_t, cells })
}

/// Coupling as a function of qubit frequency, in `g/2π` (Hz) terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum CouplingLaw {
    /// `g/2π = a ω²`, `a` in Hz per (rad/s)².
    Quadratic { a: f64 },
    /// `g/2π = k √ω`, `k` in Hz per √(rad/s).
    Sqrt { k: f64 },
}

/// Quadratic coefficient that reproduces `g/2π ≈ 5e-11 /MHz · ω²` with ω
/// expressed in MHz (rad/µs).
pub const DEFAULT_COUPLING_COEFFICIENT: f64 = 5e-17;

impl CouplingLaw {
    /// Coupling in rad/s at `omega`.
    pub fn g(&self, omega: f64) -> f64 {
        TWO_PI
            * match *self {
                CouplingLaw::Quadratic { a } => a * omega * omega,
                CouplingLaw::Sqrt { k } => k * omega.sqrt(),
            }
    }

    /// Square-root law passing through the same coupling as `self` at
    /// `omega`.
    pub fn sqrt_matched(&self, omega: f64) -> Self {
        CouplingLaw::Sqrt { k: self.g(omega) / TWO_PI / omega.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqModelSpec {
    /// Qubit frequencies (rad/s).
    pub omega_grid: Vec<f64>,
    /// Band edge (rad/s); TLSs above it use `gamma_t_inside`.
    pub edge: f64,
    pub gamma_t_inside: f64,
    pub gamma_t_outside: f64,
    pub coupling: CouplingLaw,
    /// Density per rad/s.
    pub rho: f64,
    pub offset: OffsetPolicy,
    /// Intrinsic decay and readout resonator; `omega_q` is ignored.
    pub qubit: QubitParams,
}

impl FreqModelSpec {
    /// Band edge at 5.2 GHz, 34 µs inside and 100 ns outside, quadratic
    /// coupling, 20 TLS per MHz and a 7.1 GHz readout resonator
    /// (κ/2π = 2 MHz, g_r/2π = 48 MHz), over 4 to 6.5 GHz.
    pub fn band_edge_default() -> Self {
        use crate::units::{ghz, mhz};
        Self {
            omega_grid: (0..=250).map(|i| ghz(4.0 + 0.01 * i as f64)).collect(),
            edge: ghz(5.2),
            gamma_t_inside: 1.0 / 34e-6,
            gamma_t_outside: 1.0 / 100e-9,
            coupling: CouplingLaw::Quadratic { a: DEFAULT_COUPLING_COEFFICIENT },
            rho: density_per_hz_to_angular(20e-6),
            offset: OffsetPolicy::Midpoint,
            qubit: QubitParams::new(ghz(6.3), 0.0).with_readout(ghz(7.1), mhz(2.0), mhz(48.0)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega_grid.is_empty() {
            return Err(domain("frequency grid must be non-empty"));
        }
        let (lo, hi) = self
            .omega_grid
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &w| (l.min(w), h.max(w)));
        if !(self.edge >= lo && self.edge <= hi) {
            return Err(domain("band edge must lie inside the frequency grid"));
        }
        if !(self.rho >= 0.0) {
            return Err(domain("density must be >= 0"));
        }
        match self.coupling {
            CouplingLaw::Quadratic { a } if !(a >= 0.0) => {
                return Err(domain("coupling coefficient must be >= 0"))
            }
            CouplingLaw::Sqrt { k } if !(k >= 0.0) => {
                return Err(domain("coupling coefficient must be >= 0"))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn gamma_t(&self, omega: f64) -> f64 {
        if omega > self.edge {
            self.gamma_t_inside
        } else {
            self.gamma_t_outside
        }
    }

    /// `Γ₁` at `omega` with an explicit TLS relaxation rate.
    pub fn decay_rate(&self, omega: f64, gamma_t: f64) -> Result<f64> {
        let gamma_q = self.qubit.gamma_q + readout_purcell(&self.qubit, omega)?;
        if self.rho == 0.0 {
            return Ok(gamma_q);
        }
        let fraction = match self.offset {
            OffsetPolicy::Midpoint => 0.5,
            OffsetPolicy::Fraction { fraction } => fraction,
        };
        Ok(gamma_q + comb_rate(self.coupling.g(omega), gamma_t, self.rho, fraction, gamma_q)?)
    }
}

/// `(omega, 1/Γ₁)` over the grid.
pub fn frequency_model(spec: &FreqModelSpec) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    spec.omega_grid
        .iter()
        .map(|&w| Ok((w, 1.0 / spec.decay_rate(w, spec.gamma_t(w))?)))
        .collect()
}

//! Solomon rate equations for a qubit exchanging population with a TLS bath.
//!
//! With `p = (p_q, p_t¹ … p_tᴺ)` the populations obey
//!
//! ```text
//! dp_q/dt   = -Γq (p_q - p_th) - Σ_k Γqt^k (p_q - p_t^k)
//! dp_t^k/dt = -Γt^k (p_t^k - p_th) - Γqt^k (p_t^k - p_q)
//! ```
//!
//! which is linear and time invariant between pulse events.

mod analytic;
mod propagator;
mod trace;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use analytic::{
    biexp_solution, steady_state_holeburn, triexp_solution, AdiabaticBath, BiexpModel,
    TriexpModel,
};
pub use propagator::{expm, PropagationMethod, Propagator, CONDITION_LIMIT, POPULATION_SLACK};
pub use trace::{DecayTrace, ProbeState, TraceMeta};

use crate::error::{argument, Result};
use crate::model::{QubitParams, Tls};

/// A qubit and an explicit TLS list together with their Purcell rates.
///
/// Values are immutable; evolution returns a new system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolomonSystem {
    qubit: QubitParams,
    tls: Vec<Tls>,
    p_q: f64,
    rates: Vec<f64>,
}

impl SolomonSystem {
    pub fn new(qubit: QubitParams, tls: Vec<Tls>, p_q: f64) -> Result<Self> {
        qubit.validate()?;
        for t in &tls {
            t.validate()?;
        }
        if !(0.0..=1.0).contains(&p_q) {
            return Err(argument(format!("qubit population must lie in [0, 1], got {p_q}")));
        }
        let rates = tls
            .iter()
            .map(|t| t.purcell_rate(qubit.gamma_q))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { qubit, tls, p_q, rates })
    }

    /// Qubit and bath at the thermal population.
    pub fn thermal(qubit: QubitParams, tls: Vec<Tls>) -> Result<Self> {
        let p_th = qubit.p_th;
        let tls = tls.into_iter().map(|t| Tls { p: p_th, ..t }).collect();
        Self::new(qubit, tls, p_th)
    }

    pub fn qubit(&self) -> &QubitParams {
        &self.qubit
    }

    pub fn tls(&self) -> &[Tls] {
        &self.tls
    }

    pub fn p_q(&self) -> f64 {
        self.p_q
    }

    /// Purcell exchange rate of each TLS with the qubit.
    pub fn purcell_rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn dim(&self) -> usize {
        self.tls.len() + 1
    }

    /// `(p_q, p_t¹ … p_tᴺ)`
    pub fn state(&self) -> Vec<f64> {
        std::iter::once(self.p_q).chain(self.tls.iter().map(|t| t.p)).collect()
    }

    /// Same couplings with populations taken from `state`.
    pub fn with_state(&self, state: &[f64]) -> Result<Self> {
        if state.len() != self.dim() {
            return Err(argument(format!(
                "state has {} entries, system has {}",
                state.len(),
                self.dim()
            )));
        }
        if state.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(argument("populations must lie in [0, 1]"));
        }
        let mut next = self.clone();
        next.p_q = state[0];
        for (t, &p) in next.tls.iter_mut().zip(&state[1..]) {
            t.p = p;
        }
        Ok(next)
    }

    pub fn with_qubit_population(&self, p_q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_q) {
            return Err(argument(format!("qubit population must lie in [0, 1], got {p_q}")));
        }
        Ok(Self { p_q, ..self.clone() })
    }

    /// `Γ₁ = Γq + Σ Γqt^k`
    pub fn total_decay_rate(&self) -> f64 {
        self.qubit.gamma_q + self.rates.iter().sum::<f64>()
    }

    /// Purcell-weighted mean TLS population, or `p_th` for an uncoupled bath.
    pub fn tls_weighted_population(&self) -> f64 {
        let total: f64 = self.rates.iter().sum();
        if total == 0.0 {
            return self.qubit.p_th;
        }
        self.rates.iter().zip(&self.tls).map(|(r, t)| r * t.p).sum::<f64>() / total
    }
}

/// `dp/dt = matrix · p + drive`
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub matrix: DMatrix<f64>,
    pub drive: DVector<f64>,
}

impl Generator {
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let p = DVector::from_column_slice(p);
        (&self.matrix * p + &self.drive).iter().copied().collect()
    }
}

pub fn build_generator(system: &SolomonSystem) -> Generator {
    let n = system.dim();
    let gamma_q = system.qubit.gamma_q;
    let p_th = system.qubit.p_th;
    let mut matrix = DMatrix::zeros(n, n);
    let mut drive = DVector::zeros(n);
    matrix[(0, 0)] = -system.total_decay_rate();
    drive[0] = gamma_q * p_th;
    for (k, (tls, &rate)) in system.tls.iter().zip(&system.rates).enumerate() {
        let i = k + 1;
        matrix[(0, i)] = rate;
        matrix[(i, 0)] = rate;
        matrix[(i, i)] = -(tls.gamma_t + rate);
        drive[i] = tls.gamma_t * p_th;
    }
    Generator { matrix, drive }
}

/// Exact propagation over `duration` seconds (`f64::INFINITY` is allowed).
pub fn evolve(system: &SolomonSystem, duration: f64) -> Result<SolomonSystem> {
    if duration == 0.0 {
        return Ok(system.clone());
    }
    let next = Propagator::new(system).propagate(&system.state(), duration)?;
    system.with_state(&next)
}

/// Samples the qubit (and optionally TLS) populations at `times`, measured
/// from the current state. Times must be non-negative and strictly increasing.
pub fn sample_trace(system: &SolomonSystem, times: &[f64], include_tls: bool) -> Result<DecayTrace> {
    let propagator = Propagator::new(system);
    let (p_q, rows) = propagator.sample(&system.state(), times, include_tls)?;
    let mut trace = DecayTrace::new(times.to_vec(), p_q)?;
    trace.p_t = rows.map(|rows| rows.into_iter().map(|mut r| r.split_off(1)).collect());
    trace.meta = TraceMeta {
        frequency: Some(system.qubit.omega_q),
        tls_population: Some(system.tls_weighted_population()),
        ..TraceMeta::default()
    };
    Ok(trace)
}

/// Upward and downward qubit transition rates with the bath held fixed:
/// `Γ↑ = Γq p_th + Σ Γqt^k p_t^k`, `Γ↓ = Γ₁ - Γ↑`.
pub fn transition_rates(system: &SolomonSystem) -> (f64, f64) {
    let up = system.qubit.gamma_q * system.qubit.p_th
        + system.rates.iter().zip(&system.tls).map(|(r, t)| r * t.p).sum::<f64>();
    (up, system.total_decay_rate() - up)
}

/// Instantaneous equilibrium `Γ↑ / Γ₁` of the qubit; `p_th` when `Γ₁ = 0`.
pub fn equilibrium_population(system: &SolomonSystem) -> f64 {
    let gamma_1 = system.total_decay_rate();
    if gamma_1 == 0.0 {
        return system.qubit.p_th;
    }
    transition_rates(system).0 / gamma_1
}

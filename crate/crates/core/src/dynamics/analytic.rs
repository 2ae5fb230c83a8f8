//! Closed-form trace models and the hole-burning rate balance.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `a e^(-Γ₁ t) + b e^(-Γt t) + c`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiexpModel {
    pub a: f64,
    pub gamma_1: f64,
    pub b: f64,
    pub gamma_t: f64,
    pub c: f64,
}

impl BiexpModel {
    pub fn eval(&self, t: f64) -> f64 {
        self.a * (-self.gamma_1 * t).exp() + self.b * (-self.gamma_t * t).exp() + self.c
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_1 > self.gamma_t && self.gamma_t >= 0.0) {
            return Err(domain(format!(
                "biexponential rates must satisfy gamma_1 > gamma_t >= 0, got {} and {}",
                self.gamma_1, self.gamma_t
            )));
        }
        if ![self.a, self.b, self.c].iter().all(|v| v.is_finite()) {
            return Err(domain("biexponential amplitudes must be finite"));
        }
        Ok(())
    }
}

/// `a e^(-Γ₁ t) + b e^(-Γt t) + b_l e^(-Γt^l t) + c`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriexpModel {
    pub a: f64,
    pub gamma_1: f64,
    pub b: f64,
    pub gamma_t: f64,
    pub b_l: f64,
    pub gamma_t_l: f64,
    pub c: f64,
}

impl TriexpModel {
    pub fn eval(&self, t: f64) -> f64 {
        self.a * (-self.gamma_1 * t).exp()
            + self.b * (-self.gamma_t * t).exp()
            + self.b_l * (-self.gamma_t_l * t).exp()
            + self.c
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_1 > self.gamma_t && self.gamma_t > self.gamma_t_l && self.gamma_t_l >= 0.0)
        {
            return Err(domain("triexponential rates must be strictly ordered and >= 0"));
        }
        if ![self.a, self.b, self.b_l, self.c].iter().all(|v| v.is_finite()) {
            return Err(domain("triexponential amplitudes must be finite"));
        }
        Ok(())
    }

    pub fn from_biexp(m: BiexpModel) -> Self {
        Self {
            a: m.a,
            gamma_1: m.gamma_1,
            b: m.b,
            gamma_t: m.gamma_t,
            b_l: 0.0,
            gamma_t_l: 0.0,
            c: m.c,
        }
    }
}

pub fn triexp_solution(model: &TriexpModel, t: f64) -> f64 {
    model.eval(t)
}

/// Adiabatic-elimination solution for a dense, uniform bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticBath {
    /// Total qubit decay rate Γ₁ (1/s).
    pub gamma_1: f64,
    /// Sum of the TLS Purcell rates (1/s).
    pub gamma_q_tls: f64,
    /// TLS relaxation rate (1/s).
    pub gamma_t: f64,
    pub p_th: f64,
}

impl AdiabaticBath {
    /// Biexponential whose value at `t = 0` is `p_q0`; the slow amplitude is
    /// `(Γq^TLS / Γ₁) (p_t0 - p_th)`.
    pub fn model(&self, p_q0: f64, p_t0: f64) -> Result<BiexpModel> {
        if !(self.gamma_1 > 0.0) {
            return Err(domain("adiabatic solution needs gamma_1 > 0"));
        }
        let slow = p_t0 - self.p_th;
        let b = self.gamma_q_tls / self.gamma_1 * slow;
        Ok(BiexpModel {
            a: p_q0 - self.p_th - b,
            gamma_1: self.gamma_1,
            b,
            gamma_t: self.gamma_t,
            c: self.p_th,
        })
    }
}

/// Qubit population under the adiabatic biexponential approximation.
pub fn biexp_solution(
    gamma_1: f64,
    gamma_q_tls: f64,
    gamma_t: f64,
    p_q0: f64,
    p_t0: f64,
    p_th: f64,
    t: f64,
) -> Result<f64> {
    let bath = AdiabaticBath { gamma_1, gamma_q_tls, gamma_t, p_th };
    Ok(bath.model(p_q0, p_t0)?.eval(t))
}

/// Steady-state TLS population under repeated hole-burning,
/// `Γr / (N Γt + Γr)` with `Γr = 1 / τr`.
pub fn steady_state_holeburn(n_tls: usize, gamma_t: f64, tau_r: f64) -> Result<f64> {
    if !(tau_r > 0.0) {
        return Err(domain("relaxation wait tau_r must be > 0"));
    }
    if !(gamma_t >= 0.0) {
        return Err(domain("TLS decay rate must be >= 0"));
    }
    if gamma_t.is_infinite() {
        return Ok(if n_tls == 0 { 1.0 } else { 0.0 });
    }
    let gamma_r = 1.0 / tau_r;
    Ok(gamma_r / (n_tls as f64 * gamma_t + gamma_r))
}

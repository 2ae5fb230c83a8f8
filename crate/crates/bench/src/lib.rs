//! Fixed workloads shared by the benchmarks.

use tlsbath::dynamics::{BiexpModel, DecayTrace, SolomonSystem, TriexpModel};
use tlsbath::model::{QubitParams, Tls};
use tlsbath::regimes::log_space;
use tlsbath::units::{ghz, khz, mhz};

/// `n` TLSs spread over ±5 MHz with couplings and rates varied along the
/// comb; the qubit starts excited and the bath thermal.
#[allow(clippy::approx_constant)]
pub fn solomon_system(n: usize) -> SolomonSystem {
    let qubit = QubitParams::new(ghz(6.28), 2.0e4);
    let tls = (0..n)
        .map(|k| {
            let x = (k as f64 + 0.5) / n as f64;
            let delta = mhz(10.0) * (x - 0.5);
            let g = khz(20.0 + 60.0 * (7.0 * x).fract());
            let gamma_t = 1e4 * 100f64.powf((13.0 * x).fract());
            Tls::new(delta, g, gamma_t, qubit.p_th)
        })
        .collect();
    SolomonSystem::new(qubit, tls, 1.0).expect("valid system")
}

/// 1000 log-spaced times from 1 ns to 1 ms.
pub fn times(n: usize) -> Vec<f64> {
    log_space(1e-9, 1e-3, n)
}

pub fn biexp_trace() -> DecayTrace {
    let m = BiexpModel { a: 0.7, gamma_1: 1.0 / 0.58e-6, b: 0.2, gamma_t: 1.0 / 33.2e-6, c: 0.03 };
    let t = log_space(1e-8, 300e-6, 200);
    let p = t.iter().map(|&t| m.eval(t)).collect();
    DecayTrace::new(t, p).expect("valid trace")
}

pub fn triexp_trace() -> DecayTrace {
    let m = TriexpModel {
        a: 0.6,
        gamma_1: 1.0 / 0.58e-6,
        b: 0.2,
        gamma_t: 1.0 / 44.6e-6,
        b_l: 0.1,
        gamma_t_l: 1.0 / 1.1e-3,
        c: 0.03,
    };
    let t = log_space(1e-8, 20e-3, 300);
    let p = t.iter().map(|&t| m.eval(t)).collect();
    DecayTrace::new(t, p).expect("valid trace")
}

mod common;

use proptest::prelude::*;

use tlsbath::dynamics::{
    biexp_solution, equilibrium_population, evolve, sample_trace, transition_rates,
    SolomonSystem,
};
use tlsbath::model::{QubitParams, Tls};
use tlsbath::units::{ghz, khz};

use common::dopri;

fn system_strategy() -> impl Strategy<Value = SolomonSystem> {
    let site = (-1e7..1e7f64, 1e3..1e6f64, 1e2..1e7f64, 0.0..=1.0f64);
    (
        0.0..1e6f64,
        0.0..0.2f64,
        prop::collection::vec(site, 0..10),
        0.0..=1.0f64,
    )
        .prop_map(|(gq, p_th, sites, p_q)| {
            let qubit = QubitParams::new(ghz(6.0), gq).with_p_th(p_th);
            let tls = sites.into_iter().map(|(d, g, gt, p)| Tls::new(d, g, gt, p)).collect();
            SolomonSystem::new(qubit, tls, p_q).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn populations_stay_in_bounds(sys in system_strategy(), ln_t in -25.0..0.0f64) {
        let out = evolve(&sys, ln_t.exp()).unwrap();
        for p in out.state() {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn thermal_state_is_fixed(sys in system_strategy(), ln_t in -25.0..2.0f64) {
        let p_th = sys.qubit().p_th;
        let thermal = sys.with_state(&vec![p_th; sys.dim()]).unwrap();
        for p in evolve(&thermal, ln_t.exp()).unwrap().state() {
            prop_assert!((p - p_th).abs() < 1e-12);
        }
    }

    #[test]
    fn evolution_composes(sys in system_strategy(), t1 in 0.0..1e-4f64, t2 in 0.0..1e-4f64) {
        let whole = evolve(&sys, t1 + t2).unwrap().state();
        let split = evolve(&evolve(&sys, t1).unwrap(), t2).unwrap().state();
        for (x, y) in whole.iter().zip(&split) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn total_rate_ignores_tls_populations(sys in system_strategy(), seed in 0.0..1.0f64) {
        let (up, down) = transition_rates(&sys);
        let mut state = sys.state();
        for (k, p) in state.iter_mut().enumerate().skip(1) {
            *p = (seed * k as f64 * 0.37).fract();
        }
        let other = sys.with_state(&state).unwrap();
        let (up2, down2) = transition_rates(&other);
        prop_assert!(((up + down) - (up2 + down2)).abs() <= 1e-12 * (up + down).max(1.0));
        prop_assert!(((up + down) - sys.total_decay_rate()).abs() <= 1e-12 * (up + down).max(1.0));
    }
}

#[test]
fn equilibrium_matches_frozen_bath_integration() {
    // With the TLS populations held fixed the qubit obeys a scalar linear
    // equation; integrate it long enough to settle.
    let qubit = QubitParams::new(ghz(6.0), khz(5.0)).with_p_th(0.05);
    let tls = vec![
        Tls::new(0.0, khz(20.0), 3e4, 0.4),
        Tls::new(khz(300.0), khz(40.0), 1e5, 0.1),
        Tls::new(-khz(800.0), khz(60.0), 1e6, 0.8),
    ];
    let sys = SolomonSystem::new(qubit, tls.clone(), 0.0).unwrap();
    let rates: Vec<f64> = tls.iter().map(|t| t.purcell_rate(qubit.gamma_q).unwrap()).collect();
    let rhs = |p: &[f64], out: &mut [f64]| {
        out[0] = -qubit.gamma_q * (p[0] - qubit.p_th)
            + rates.iter().zip(&tls).map(|(r, t)| r * (t.p - p[0])).sum::<f64>();
    };
    let horizon = 60.0 / sys.total_decay_rate();
    let settled = dopri(rhs, &[0.0], &[horizon], 1e-12, 1e-15)[0][0];
    assert!((equilibrium_population(&sys) - settled).abs() < 1e-10);
}

#[test]
fn sample_times_compose() {
    let qubit = QubitParams::new(ghz(6.0), khz(5.0));
    let tls = vec![Tls::new(0.0, khz(20.0), 3e4, 0.4); 4];
    let sys = SolomonSystem::new(qubit, tls, 1.0).unwrap();
    let trace = sample_trace(&sys, &[2e-6, 7e-6], true).unwrap();
    let first = evolve(&sys, 2e-6).unwrap();
    let second = evolve(&first, 5e-6).unwrap();
    let rows = trace.p_t.unwrap();
    for (x, y) in rows[1].iter().zip(&second.state()[1..]) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((trace.p_q[0] - first.p_q()).abs() < 1e-12);
}

#[test]
fn biexp_pinned_at_start_and_single_exponential_when_bath_is_thermal() {
    let v = biexp_solution(2e6, 1.9e6, 3e4, 0.9, 0.3, 0.03, 0.0).unwrap();
    assert!((v - 0.9).abs() < 1e-15);
    for t in [1e-7, 1e-6, 5e-6] {
        let v = biexp_solution(2e6, 1.9e6, 3e4, 0.9, 0.03, 0.03, t).unwrap();
        assert!((v - (0.03 + 0.87 * (-2e6 * t).exp())).abs() < 1e-15);
    }
}

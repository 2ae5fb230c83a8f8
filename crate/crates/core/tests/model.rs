mod common;

use num::{BigRational, FromPrimitive, ToPrimitive};
use proptest::prelude::*;

use tlsbath::model::{
    comb_sum_closed_form, fermi_rate, mergemon_density, purcell_limit_rate, purcell_rate,
    readout_purcell, total_decay_rate, MergemonGeometry, QubitParams, Tls, TlsEnsemble,
    UniformComb,
};
use tlsbath::units::{density_per_hz_to_angular, ghz, khz, mhz, TWO_PI};

use common::truncated_comb;

fn exact_purcell(g: f64, gamma_m: f64, delta: f64) -> f64 {
    let q = |x: f64| BigRational::from_f64(x).unwrap();
    let (g, gm, d) = (q(g), q(gamma_m), q(delta));
    let two = BigRational::from_integer(2.into());
    let value = two * &g * &g * &gm / (&gm * &gm + &d * &d);
    value.to_f64().unwrap()
}

#[test]
fn purcell_rate_matches_exact_rational_arithmetic() {
    let cases = [
        (khz(50.0), 1.5e4, 0.0),
        (khz(50.0), 1.5e4, mhz(1.0)),
        (mhz(10.0), 5e6, ghz(1.43)),
        (1.0, 1.0, 1.0),
        (3.0e5, 2.9e4, -7.7e6),
    ];
    for (g, gm, d) in cases {
        let got = purcell_rate(g, gm, d).unwrap();
        let want = exact_purcell(g, gm, d);
        assert!(((got - want) / want).abs() < 2e-15, "{got} vs {want}");
    }
}

#[test]
fn fermi_rate_at_device_point() {
    // g/2π = 50 kHz and ρ = 20 per MHz give 1/Γ ≈ 0.51 µs, the same scale
    // as the measured 0.58 µs lifetime.
    let rate = fermi_rate(khz(50.0), density_per_hz_to_angular(20e-6));
    let by_hand = 2.0 * std::f64::consts::PI * (TWO_PI * 5e4).powi(2) * 20e-6 / TWO_PI;
    assert!((rate / by_hand - 1.0).abs() < 1e-14);
    assert!((1.0 / rate - 0.5066e-6).abs() < 1e-9);
}

#[test]
fn dense_comb_matches_fermi_rate() {
    let g = khz(50.0);
    let spacing = 1.0e4;
    // b = Γm / Δ = 10.
    let comb = UniformComb::centered(spacing, g, 2.0 * 10.0 * spacing);
    let rate = comb.decay_rate(0.0).unwrap();
    assert!((rate / fermi_rate(g, 1.0 / spacing) - 1.0).abs() < 1e-3);
}

#[test]
fn sparse_comb_matches_nearest_site() {
    let g = khz(100.0);
    let gamma_t = 1e4;
    let spacing = gamma_t / 2.0 / 1e-4;
    let offset = 0.05 * spacing;
    let comb = UniformComb::centered(spacing, g, gamma_t).with_offset(offset);
    let rate = comb.decay_rate(0.0).unwrap();
    let nearest = purcell_limit_rate(g, offset, gamma_t).unwrap();
    assert!((rate / nearest - 1.0).abs() < 0.05);
}

#[test]
fn readout_purcell_at_reference_values() {
    let q = QubitParams::new(ghz(6.3), 0.0).with_readout(ghz(7.1), mhz(2.0), mhz(48.0));
    let rate = readout_purcell(&q, ghz(6.3)).unwrap();
    let by_hand = (48.0f64 / 800.0).powi(2) * TWO_PI * 2e6;
    assert!((rate / by_hand - 1.0).abs() < 1e-12);
    // Bound quoted for the device: slower than 1/13 µs.
    assert!(1.0 / rate > 13e-6);
    assert!((1.0 / rate - 22.10e-6).abs() < 0.01e-6);
    assert_eq!(readout_purcell(&q.with_readout(ghz(7.1), mhz(2.0), 0.0), ghz(6.3)).unwrap(), 0.0);
}

#[test]
fn comb_materialization_converges_to_closed_form() {
    let comb = UniformComb::centered(mhz(1.0), khz(30.0), 1e6).with_truncation(20_000);
    let q = QubitParams::new(ghz(6.0), 0.0);
    let explicit = total_decay_rate(&q, &TlsEnsemble::Comb(comb)).unwrap();
    let closed = comb.decay_rate(0.0).unwrap();
    let (a, b, c) = comb.closed_form_params(0.0).unwrap();
    let bound = a * b * b * 2.0 / (20_000.0 - (b * c).abs());
    assert!((explicit - closed).abs() <= bound);
}

fn site() -> impl Strategy<Value = Tls> {
    (-1e7..1e7f64, 1e3..1e6f64, 1e3..1e7f64, 0.0..1.0f64)
        .prop_map(|(d, g, gt, p)| Tls::new(d, g, gt, p))
}

proptest! {
    #[test]
    fn purcell_is_even_and_peaked(g in 1.0..1e7f64, gm in 1.0..1e7f64, d in 1.0..1e9f64) {
        let at = |x: f64| purcell_rate(g, gm, x).unwrap();
        prop_assert_eq!(at(d), at(-d));
        prop_assert!(at(d) < at(0.0));
        prop_assert!(at(1.5 * d) < at(d));
        prop_assert!((at(0.0) / (2.0 * g * g / gm) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn comb_within_tail_bound(
        ln_a in 0.0..(1e8f64).ln(),
        ln_b in (1e-4f64).ln()..(1e2f64).ln(),
        frac in -0.5..0.5f64,
    ) {
        let (a, b) = (ln_a.exp(), ln_b.exp());
        let c = frac / b;
        let h = 2000;
        let closed = comb_sum_closed_form(a, b, c).unwrap();
        let truncated = truncated_comb(a, b, c, h);
        let bound = a * b * b * 2.0 / (h as f64 - (b * c).abs());
        prop_assert!(closed - truncated <= bound + 1e-12 * closed);
        prop_assert!(closed >= truncated * (1.0 - 1e-12));
    }

    #[test]
    fn fermi_asymptote(ln_a in -5.0..5.0f64, b in 3.0..300.0f64, frac in 0.0..1.0f64) {
        let a = f64::exp(ln_a);
        let v = comb_sum_closed_form(a, b, frac / b).unwrap();
        prop_assert!((v / (std::f64::consts::PI * a * b) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn adding_a_site_never_lowers_the_rate(list in prop::collection::vec(site(), 0..12), extra in site()) {
        let q = QubitParams::new(ghz(6.0), 1e4);
        let before = total_decay_rate(&q, &TlsEnsemble::Explicit(list.clone())).unwrap();
        let mut more = list;
        more.push(extra);
        let after = total_decay_rate(&q, &TlsEnsemble::Explicit(more)).unwrap();
        prop_assert!(after >= before);
    }

    #[test]
    fn rate_ignores_site_order(list in prop::collection::vec(site(), 1..12), shift in 0usize..12) {
        let q = QubitParams::new(ghz(6.0), 1e4);
        let mut rotated = list.clone();
        let k = shift % rotated.len();
        rotated.rotate_left(k);
        rotated.reverse();
        let x = total_decay_rate(&q, &TlsEnsemble::Explicit(list)).unwrap();
        let y = total_decay_rate(&q, &TlsEnsemble::Explicit(rotated)).unwrap();
        prop_assert!((x - y).abs() <= 1e-13 * x);
    }

    #[test]
    fn merged_element_density_times_g_squared_is_constant(g1 in 1e4..1e9f64, g2 in 1e4..1e9f64) {
        let geo = MergemonGeometry::reference();
        let k1 = mergemon_density(g1, &geo).unwrap() * g1 * g1;
        let k2 = mergemon_density(g2, &geo).unwrap() * g2 * g2;
        prop_assert!((k1 / k2 - 1.0).abs() < 1e-14);
    }
}

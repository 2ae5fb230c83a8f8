//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Log-uniform sample in `[lo, hi]`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp()
}

/// Neumaier compensated sum.
#[derive(Default)]
pub struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `Σ a b² / (b² + (h - b c)²)` over `|h| <= h_max`, summed from the tails
/// inward, plus the midpoint-rule integral of the two tails beyond.
pub fn brute_comb(a: f64, b: f64, c: f64, h_max: i64) -> f64 {
    let s = b * c;
    let term = |h: i64| {
        let d = h as f64 - s;
        a * b * b / (b * b + d * d)
    };
    let mut acc = Compensated::default();
    let edge = h_max as f64 + 0.5;
    let half_pi = std::f64::consts::FRAC_PI_2;
    acc.add(a * b * (half_pi - ((edge - s) / b).atan()));
    acc.add(a * b * (half_pi - ((edge + s) / b).atan()));
    for k in (1..=h_max).rev() {
        acc.add(term(k));
        acc.add(term(-k));
    }
    acc.add(term(0));
    acc.value()
}

/// One TLS for the hand-written rate equations.
#[derive(Debug, Clone, Copy)]
pub struct Site {
    pub delta: f64,
    pub g: f64,
    pub gamma_t: f64,
}

/// Right-hand side of the qubit + TLS population equations, written out
/// term by term.
pub struct RateEquations {
    pub gamma_q: f64,
    pub p_th: f64,
    pub sites: Vec<Site>,
    exchange: Vec<f64>,
}

impl RateEquations {
    pub fn new(gamma_q: f64, p_th: f64, sites: Vec<Site>) -> Self {
        let exchange = sites
            .iter()
            .map(|s| {
                let gm = 0.5 * (gamma_q + s.gamma_t);
                2.0 * s.g * s.g * gm / (gm * gm + s.delta * s.delta)
            })
            .collect();
        Self { gamma_q, p_th, sites, exchange }
    }

    pub fn rhs(&self, p: &[f64], out: &mut [f64]) {
        let pq = p[0];
        let mut dq = -self.gamma_q * (pq - self.p_th);
        for (k, s) in self.sites.iter().enumerate() {
            let flow = self.exchange[k] * (p[k + 1] - pq);
            dq += flow;
            out[k + 1] = -flow - s.gamma_t * (p[k + 1] - self.p_th);
        }
        out[0] = dq;
    }
}

/// Dormand–Prince 5(4) with standard step-size control; returns the state at
/// every time in `times` (increasing, starting at or after 0).
pub fn dopri(
    f: impl Fn(&[f64], &mut [f64]),
    y0: &[f64],
    times: &[f64],
    rtol: f64,
    atol: f64,
) -> Vec<Vec<f64>> {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] =
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut h = 1e-12f64.max(times.first().copied().unwrap_or(0.0) * 1e-6);
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            let step = h.min(target - t);
            f(&y, &mut k[0]);
            for s in 1..7 {
                for i in 0..n {
                    tmp[i] = y[i] + step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                f(&tmp, &mut stage);
                k[s].copy_from_slice(&stage);
            }
            let mut err = 0.0f64;
            let mut next = vec![0.0; n];
            for i in 0..n {
                let y5 = y[i] + step * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>();
                let y4 = y[i] + step * (0..7).map(|j| B4[j] * k[j][i]).sum::<f64>();
                let scale = atol + rtol * y[i].abs().max(y5.abs());
                err = err.max((y5 - y4).abs() / scale);
                next[i] = y5;
            }
            if err <= 1.0 {
                t += step;
                y = next;
                if step < h {
                    // Shortened to land on the output time; keep the old h.
                    continue;
                }
            }
            let factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
            h = step * factor.clamp(0.2, 5.0);
        }
        out.push(y.clone());
    }
    out
}

/// Plain truncated sum over `|h| <= h_max`, no tail correction.
pub fn truncated_comb(a: f64, b: f64, c: f64, h_max: i64) -> f64 {
    let s = b * c;
    let mut acc = Compensated::default();
    for k in (1..=h_max).rev() {
        for h in [k, -k] {
            let d = h as f64 - s;
            acc.add(a * b * b / (b * b + d * d));
        }
    }
    acc.add(a * b * b / (b * b + s * s));
    acc.value()
}

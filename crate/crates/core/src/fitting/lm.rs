//! Levenberg-Marquardt on `[A_1, ln Γ_1, …, A_k, ln Γ_k, c]`.

use nalgebra::{DMatrix, DVector};

use super::expsum::ExpSum;

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub model: ExpSum,
    /// Unscaled inverse of `JᵀWJ` in the fit coordinates.
    pub inv_hessian: DMatrix<f64>,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn pack(m: &ExpSum) -> Vec<f64> {
    let mut theta = Vec::with_capacity(2 * m.len() + 1);
    for (a, g) in m.amps.iter().zip(&m.rates) {
        theta.push(*a);
        theta.push(g.max(f64::MIN_POSITIVE).ln());
    }
    theta.push(m.offset);
    theta
}

fn unpack(theta: &[f64]) -> ExpSum {
    let k = (theta.len() - 1) / 2;
    ExpSum {
        amps: (0..k).map(|i| theta[2 * i]).collect(),
        rates: (0..k).map(|i| theta[2 * i + 1].exp()).collect(),
        offset: theta[2 * k],
    }
}

/// Weighted residuals `√w (y - f)` and Jacobian `√w ∂f/∂θ`.
fn linearize(t: &[f64], y: &[f64], w: &[f64], theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let n = t.len();
    let p = theta.len();
    let k = (p - 1) / 2;
    let mut r = DVector::zeros(n);
    let mut j = DMatrix::zeros(n, p);
    for i in 0..n {
        let sw = w[i].sqrt();
        let mut f = theta[2 * k];
        for c in 0..k {
            let (a, g) = (theta[2 * c], theta[2 * c + 1].exp());
            let e = (-g * t[i]).exp();
            f += a * e;
            j[(i, 2 * c)] = sw * e;
            j[(i, 2 * c + 1)] = -sw * a * g * t[i] * e;
        }
        j[(i, 2 * k)] = sw;
        r[i] = sw * (y[i] - f);
    }
    (r, j)
}

fn inverse(h: &DMatrix<f64>) -> DMatrix<f64> {
    match h.clone().cholesky() {
        Some(c) => c.inverse(),
        None => h
            .clone()
            .pseudo_inverse(1e-14 * h.diagonal().amax().max(f64::MIN_POSITIVE))
            .unwrap_or_else(|_| DMatrix::from_element(h.nrows(), h.ncols(), f64::INFINITY)),
    }
}

/// Minimizes the weighted SSE from `start`. `ln Γ` is kept inside
/// `ln_bounds` so that a vanishing component cannot drift without limit.
pub(crate) fn levenberg_marquardt(
    t: &[f64],
    y: &[f64],
    w: &[f64],
    start: &ExpSum,
    ln_bounds: (f64, f64),
    max_iter: usize,
) -> LmOutcome {
    let mut theta = pack(start);
    let p = theta.len();
    let k = (p - 1) / 2;
    let y_scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let clamp = |theta: &mut [f64]| {
        for c in 0..k {
            theta[2 * c + 1] = theta[2 * c + 1].clamp(ln_bounds.0, ln_bounds.1);
        }
    };
    clamp(&mut theta);

    let (mut r, mut j) = linearize(t, y, w, &theta);
    let mut sse = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let floor = (1e-14 * y_scale).powi(2) * t.len() as f64;

    while iterations < max_iter {
        iterations += 1;
        if sse <= floor {
            converged = true;
            break;
        }
        let jt = j.transpose();
        let h = &jt * &j;
        let g = &jt * &r;
        let diag: Vec<f64> = {
            let dmax = h.diagonal().amax().max(f64::MIN_POSITIVE);
            h.diagonal().iter().map(|d| d.max(1e-20 * dmax)).collect()
        };
        let mut accepted = false;
        let mut small_step = false;
        while lambda < 1e20 {
            let mut a = h.clone();
            for i in 0..p {
                a[(i, i)] += lambda * diag[i];
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&g);
            let mut trial: Vec<f64> = theta.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            clamp(&mut trial);
            let (r_new, j_new) = linearize(t, y, w, &trial);
            let sse_new = r_new.norm_squared();
            if sse_new.is_finite() && sse_new <= sse {
                small_step = trial.iter().zip(&theta).enumerate().all(|(i, (a, b))| {
                    let scale = if i % 2 == 1 && i < 2 * k { 1.0 } else { y_scale };
                    (a - b).abs() <= 1e-12 * scale
                });
                let rel_gain = (sse - sse_new) / sse.max(f64::MIN_POSITIVE);
                theta = trial;
                r = r_new;
                j = j_new;
                sse = sse_new;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                if rel_gain < 1e-15 && lambda < 1e-6 {
                    small_step = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted || small_step {
            // No downhill step exists at any damping: a minimum to rounding.
            converged = true;
            break;
        }
    }

    let h = j.transpose() * &j;
    LmOutcome {
        model: unpack(&theta),
        inv_hessian: inverse(&h),
        sse,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_biexponential() {
        let t: Vec<f64> = (0..200).map(|i| 1e-8 * 10f64.powf(i as f64 / 45.0)).collect();
        let truth = ExpSum { amps: vec![0.7, 0.25], rates: vec![1.0 / 0.58e-6, 1.0 / 34e-6], offset: 0.028 };
        let y: Vec<f64> = t.iter().map(|&t| truth.eval(t)).collect();
        let w = vec![1.0; t.len()];
        let start = ExpSum { amps: vec![0.5, 0.5], rates: vec![1e6, 1e4], offset: 0.0 };
        let out = levenberg_marquardt(&t, &y, &w, &start, (0.0, 40.0), 500);
        assert!(out.converged);
        let m = out.model.sorted();
        for (a, b) in m.rates.iter().zip(&truth.rates) {
            assert!((a / b - 1.0).abs() < 1e-9);
        }
    }
}

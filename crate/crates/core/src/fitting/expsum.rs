//! Sums of decaying exponentials, `Σ A_i e^(-Γ_i t) + c`, and the linear
//! least-squares solve for their amplitudes at fixed rates.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ExpSum {
    pub amps: Vec<f64>,
    pub rates: Vec<f64>,
    pub offset: f64,
}

impl ExpSum {
    pub fn eval(&self, t: f64) -> f64 {
        self.amps
            .iter()
            .zip(&self.rates)
            .map(|(a, g)| a * (-g * t).exp())
            .sum::<f64>()
            + self.offset
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    /// Weighted sum of squared residuals.
    pub fn sse(&self, t: &[f64], y: &[f64], w: &[f64]) -> f64 {
        t.iter()
            .zip(y)
            .zip(w)
            .map(|((&t, &y), &w)| {
                let r = y - self.eval(t);
                w * r * r
            })
            .sum()
    }

    /// Components ordered from fastest to slowest.
    #[cfg(test)]
    pub fn sorted(mut self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&i, &j| self.rates[j].total_cmp(&self.rates[i]));
        self.amps = idx.iter().map(|&i| self.amps[i]).collect();
        self.rates = idx.iter().map(|&i| self.rates[i]).collect();
        self
    }
}

/// Best amplitudes (and offset, when `with_offset`) for fixed `rates`.
/// Returns `None` when the design matrix is rank deficient.
pub(crate) fn solve_amplitudes(
    t: &[f64],
    y: &[f64],
    w: &[f64],
    rates: &[f64],
    with_offset: bool,
) -> Option<ExpSum> {
    let k = rates.len();
    let p = k + usize::from(with_offset);
    let n = t.len();
    if n < p {
        return None;
    }
    let mut x = DMatrix::zeros(n, p);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        let sw = w[i].sqrt();
        for (j, g) in rates.iter().enumerate() {
            x[(i, j)] = sw * (-g * t[i]).exp();
        }
        if with_offset {
            x[(i, k)] = sw;
        }
        rhs[i] = sw * y[i];
    }
    let sol = x.svd(true, true).solve(&rhs, 1e-12).ok()?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(ExpSum {
        amps: sol.iter().take(k).copied().collect(),
        rates: rates.to_vec(),
        offset: if with_offset { sol[k] } else { 0.0 },
    })
}

/// Normal-equation variant of [`solve_amplitudes`] for the grid search,
/// where the exponentials are precomputed per rate.
pub(crate) struct Design<'a> {
    pub y: &'a [f64],
    pub w: &'a [f64],
    /// `columns[g][i] = e^(-rate_g t_i)`
    pub columns: Vec<Vec<f64>>,
}

impl Design<'_> {
    /// Weighted SSE of the best fit using columns `pick` plus an offset.
    pub fn sse(&self, pick: &[usize]) -> Option<f64> {
        let p = pick.len() + 1;
        let n = self.y.len();
        let col = |j: usize, i: usize| if j < pick.len() { self.columns[pick[j]][i] } else { 1.0 };
        let mut ata = DMatrix::<f64>::zeros(p, p);
        let mut atb = DVector::<f64>::zeros(p);
        for i in 0..n {
            let w = self.w[i];
            for a in 0..p {
                let ca = col(a, i) * w;
                atb[a] += ca * self.y[i];
                for b in a..p {
                    ata[(a, b)] += ca * col(b, i);
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                ata[(a, b)] = ata[(b, a)];
            }
        }
        let sol = ata.cholesky()?.solve(&atb);
        let mut sse = 0.0;
        for i in 0..n {
            let f: f64 = (0..p).map(|j| sol[j] * col(j, i)).sum();
            let r = self.y[i] - f;
            sse += self.w[i] * r * r;
        }
        sse.is_finite().then_some(sse)
    }
}

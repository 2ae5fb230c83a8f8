//! Exact propagation of the linear rate equations `dp/dt = A p + r`.
//!
//! The fixed point is `p_th · 1`, so the deviation `x = p - p_th` obeys
//! `dx/dt = A x`. `A` is symmetric (the exchange term couples qubit and TLS
//! with the same rate in both directions) and negative semi-definite, so an
//! orthogonal eigendecomposition gives `x(t) = V e^(Λt) Vᵀ x(0)`. When the
//! eigenvectors lose orthogonality the propagator falls back to a Padé
//! scaling-and-squaring matrix exponential.

use nalgebra::{DMatrix, DVector};

use super::{build_generator, SolomonSystem};
use crate::error::{argument, Error, Result};

/// Populations within this distance of `[0, 1]` are clamped; larger
/// violations are reported as numeric errors.
pub const POPULATION_SLACK: f64 = 1e-9;

/// Eigenvector condition number above which the Padé route is used.
pub const CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMethod {
    Auto,
    Eigen,
    Pade,
}

#[derive(Debug, Clone)]
enum Kind {
    Eigen {
        values: DVector<f64>,
        vectors: DMatrix<f64>,
    },
    Pade {
        matrix: DMatrix<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Propagator {
    p_th: f64,
    kind: Kind,
}

impl Propagator {
    pub fn new(system: &SolomonSystem) -> Self {
        Self::with_method(system, PropagationMethod::Auto)
    }

    pub fn with_method(system: &SolomonSystem, method: PropagationMethod) -> Self {
        let p_th = system.qubit().p_th;
        let matrix = build_generator(system).matrix;
        let kind = match method {
            PropagationMethod::Pade => Kind::Pade { matrix },
            PropagationMethod::Eigen | PropagationMethod::Auto => {
                let eig = matrix.clone().symmetric_eigen();
                // A is negative semi-definite; positive eigenvalues are rounding.
                let values = eig.eigenvalues.map(|l| l.min(0.0));
                let vectors = eig.eigenvectors;
                if method == PropagationMethod::Auto
                    && condition_estimate(&vectors) > CONDITION_LIMIT
                {
                    Kind::Pade { matrix }
                } else {
                    Kind::Eigen { values, vectors }
                }
            }
        };
        Self { p_th, kind }
    }

    /// Route actually used by this propagator.
    pub fn method(&self) -> PropagationMethod {
        match self.kind {
            Kind::Eigen { .. } => PropagationMethod::Eigen,
            Kind::Pade { .. } => PropagationMethod::Pade,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Eigen { values, .. } => values.len(),
            Kind::Pade { matrix } => matrix.nrows(),
        }
    }

    /// Full state after `duration` seconds.
    pub fn propagate(&self, state: &[f64], duration: f64) -> Result<Vec<f64>> {
        check_duration(duration)?;
        self.check_dim(state)?;
        if duration == 0.0 {
            return Ok(state.to_vec());
        }
        let x0 = DVector::from_iterator(state.len(), state.iter().map(|p| p - self.p_th));
        let x = match &self.kind {
            Kind::Eigen { values, vectors } => {
                let y0 = vectors.tr_mul(&x0);
                let y = DVector::from_iterator(
                    y0.len(),
                    y0.iter().zip(values.iter()).map(|(y, &l)| y * decay(l, duration)),
                );
                vectors * y
            }
            Kind::Pade { matrix } => {
                if duration.is_infinite() {
                    return Err(argument("Padé propagation needs a finite duration"));
                }
                expm(&(matrix * duration)) * x0
            }
        };
        finalize(x.iter().map(|v| v + self.p_th).collect())
    }

    /// States at every time in `times` (strictly increasing, measured from
    /// `state`). Returns the qubit population per time and, when `full` is
    /// set, the complete state per time.
    #[allow(clippy::type_complexity)]
    pub fn sample(
        &self,
        state: &[f64],
        times: &[f64],
        full: bool,
    ) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>)> {
        self.check_dim(state)?;
        for &t in times {
            check_duration(t)?;
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(argument("sample times must be strictly increasing"));
        }
        let mut p_q = Vec::with_capacity(times.len());
        let mut rows = full.then(|| Vec::with_capacity(times.len()));
        match &self.kind {
            Kind::Eigen { values, vectors } => {
                let x0 = DVector::from_iterator(state.len(), state.iter().map(|p| p - self.p_th));
                let y0 = vectors.tr_mul(&x0);
                if full {
                    // One matrix product for all times: column j is e^(Λ t_j) y0.
                    let mut modes = DMatrix::zeros(values.len(), times.len());
                    for (j, &t) in times.iter().enumerate() {
                        for i in 0..values.len() {
                            modes[(i, j)] = y0[i] * decay(values[i], t);
                        }
                    }
                    let x = vectors * modes;
                    let mut all = Vec::with_capacity(times.len());
                    for (j, &t) in times.iter().enumerate() {
                        let row = if t == 0.0 {
                            state.to_vec()
                        } else {
                            finalize(x.column(j).iter().map(|v| v + self.p_th).collect())?
                        };
                        p_q.push(row[0]);
                        all.push(row);
                    }
                    rows = Some(all);
                } else {
                    let head: Vec<f64> =
                        (0..values.len()).map(|j| vectors[(0, j)] * y0[j]).collect();
                    for &t in times {
                        if t == 0.0 {
                            p_q.push(state[0]);
                            continue;
                        }
                        let xq: f64 = head
                            .iter()
                            .zip(values.iter())
                            .map(|(h, &l)| h * decay(l, t))
                            .sum();
                        p_q.push(clamp_one(xq + self.p_th)?);
                    }
                }
            }
            Kind::Pade { .. } => {
                for &t in times {
                    let row = self.propagate(state, t)?;
                    p_q.push(row[0]);
                    if let Some(rows) = rows.as_mut() {
                        rows.push(row);
                    }
                }
            }
        }
        Ok((p_q, rows))
    }

    fn check_dim(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.dim() {
            return Err(argument(format!(
                "state has {} entries, propagator expects {}",
                state.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

fn check_duration(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(argument(format!("durations must be >= 0, got {t}")));
    }
    Ok(())
}

#[inline]
fn decay(lambda: f64, t: f64) -> f64 {
    if t.is_infinite() {
        if lambda < 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        (lambda * t).exp()
    }
}

fn clamp_one(p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::Numeric(format!("non-finite population {p}")));
    }
    if !(-POPULATION_SLACK..=1.0 + POPULATION_SLACK).contains(&p) {
        return Err(Error::Numeric(format!("population {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

pub(crate) fn finalize(mut v: Vec<f64>) -> Result<Vec<f64>> {
    for p in v.iter_mut() {
        *p = clamp_one(*p)?;
    }
    Ok(v)
}

/// Cheap estimate of the eigenvector condition number from the
/// orthogonality defect `|VᵀV z - z|` on two probe vectors.
fn condition_estimate(vectors: &DMatrix<f64>) -> f64 {
    let n = vectors.nrows();
    if n == 0 {
        return 1.0;
    }
    let norm = (n as f64).sqrt();
    let probes = [
        DVector::from_element(n, 1.0 / norm),
        DVector::from_iterator(n, (0..n).map(|i| (if i % 2 == 0 { 1.0 } else { -1.0 }) / norm)),
    ];
    let defect = probes
        .iter()
        .map(|z| (vectors.tr_mul(&(vectors * z)) - z).norm() / z.norm())
        .fold(0.0, f64::max);
    if defect >= 1.0 || !defect.is_finite() {
        f64::INFINITY
    } else {
        ((1.0 + defect) / (1.0 - defect)).sqrt()
    }
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 5.371_920_351_148_152;

    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > THETA_13 {
        (norm1 / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(squarings);
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * B[13] + &a4 * B[11] + &a2 * B[9])
        + &a6 * B[7]
        + &a4 * B[5]
        + &a2 * B[3]
        + &ident * B[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * B[12] + &a4 * B[10] + &a2 * B[8])
        + &a6 * B[6]
        + &a4 * B[4]
        + &a2 * B[2]
        + &ident * B[0];

    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .expect("Padé denominator is non-singular for a scaled matrix");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -50.0, 0.0, -1e4]));
        let e = expm(&a);
        for (i, l) in [-1.0f64, -50.0, 0.0, -1e4].iter().enumerate() {
            assert!((e[(i, i)] - l.exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]) * 3.0;
        let e = expm(&a);
        assert!((e[(0, 0)] - 3f64.cos()).abs() < 1e-13);
        assert!((e[(1, 0)] - 3f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn clamping_rule() {
        assert_eq!(clamp_one(-5e-10).unwrap(), 0.0);
        assert_eq!(clamp_one(1.0 + 5e-10).unwrap(), 1.0);
        assert!(clamp_one(-1e-6).is_err());
        assert!(clamp_one(f64::NAN).is_err());
    }
}

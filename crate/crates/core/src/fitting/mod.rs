//! Bi- and tri-exponential fits of qubit decay traces.
//!
//! Rates are fitted in `ln Γ` so they stay positive across many decades.
//! Components are ordered fast to slow after convergence; two rates closer
//! than [`DEGENERACY_TOLERANCE`], or a component whose amplitude vanishes or
//! sits within two standard errors of zero, are replaced by a fit with one
//! component fewer and the result is flagged as degenerate.

mod expsum;
mod init;
mod io;
mod lm;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{ingest_traces, read_trace_csv, write_trace_csv};

use crate::dynamics::{BiexpModel, DecayTrace, TriexpModel};
use crate::error::{argument, domain, Error, Result};
use expsum::ExpSum;

/// Relative rate separation below which two components are merged.
pub const DEGENERACY_TOLERANCE: f64 = 0.05;

/// Detection floors are this multiple of the sampling resolution.
pub const DETECTION_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    Uniform,
    /// Weights `1 / σ²` from the trace's `population_std`.
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Run both starting points and keep the lower residual.
    #[default]
    Auto,
    PeelOff,
    LogSpaced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub weighting: Weighting,
    pub init: InitStrategy,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { weighting: Weighting::Uniform, init: InitStrategy::Auto, max_iter: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FitModel {
    Bi(BiexpModel),
    Tri(TriexpModel),
}

impl FitModel {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            FitModel::Bi(m) => m.eval(t),
            FitModel::Tri(m) => m.eval(t),
        }
    }

    /// `(name, value)` in the order used by [`FitResult::std_errors`].
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            FitModel::Bi(m) => vec![
                ("a", m.a),
                ("gamma_1", m.gamma_1),
                ("b", m.b),
                ("gamma_t", m.gamma_t),
                ("c", m.c),
            ],
            FitModel::Tri(m) => vec![
                ("a", m.a),
                ("gamma_1", m.gamma_1),
                ("b", m.b),
                ("gamma_t", m.gamma_t),
                ("b_l", m.b_l),
                ("gamma_t_l", m.gamma_t_l),
                ("c", m.c),
            ],
        }
    }

    pub fn gamma_1(&self) -> f64 {
        match self {
            FitModel::Bi(m) => m.gamma_1,
            FitModel::Tri(m) => m.gamma_1,
        }
    }

    pub fn gamma_t(&self) -> f64 {
        match self {
            FitModel::Bi(m) => m.gamma_t,
            FitModel::Tri(m) => m.gamma_t,
        }
    }

    pub fn b(&self) -> f64 {
        match self {
            FitModel::Bi(m) => m.b,
            FitModel::Tri(m) => m.b,
        }
    }

    pub fn c(&self) -> f64 {
        match self {
            FitModel::Bi(m) => m.c,
            FitModel::Tri(m) => m.c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FitModel::Bi(_) => "biexponential",
            FitModel::Tri(_) => "triexponential",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// One entry per [`FitModel::params`] entry; zero for components
    /// removed by a degenerate refit.
    pub std_errors: Vec<f64>,
    pub residual_rms: f64,
    pub converged: bool,
    pub n_iterations: usize,
    /// Two rates merged; the model carries fewer active components.
    pub degenerate: bool,
    /// Residuals show structure the model does not explain.
    pub high_residual: bool,
}

impl FitResult {
    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.model
            .params()
            .iter()
            .position(|(n, _)| *n == name)
            .map(|i| self.std_errors[i])
    }
}

struct Prepared {
    t: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    std: Option<Vec<f64>>,
}

fn prepare(trace: &DecayTrace, min_samples: usize, weighting: Weighting) -> Result<Prepared> {
    trace.validate()?;
    if trace.times.iter().any(|t| !t.is_finite()) {
        return Err(argument("fit needs finite sample times"));
    }
    if trace.len() < min_samples {
        return Err(argument(format!(
            "fit needs at least {min_samples} samples, got {}",
            trace.len()
        )));
    }
    let (lo, hi) = trace
        .p_q
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(hi - lo > 1e-14 * hi.abs().max(1.0)) {
        return Err(Error::Fit("trace is constant; no decay to fit".into()));
    }
    let w = match weighting {
        Weighting::Uniform => vec![1.0; trace.len()],
        Weighting::Variance => {
            let std = trace
                .population_std
                .as_ref()
                .ok_or_else(|| argument("variance weighting needs population_std"))?;
            if std.iter().any(|s| !(*s > 0.0)) {
                return Err(argument("variance weighting needs positive population_std"));
            }
            std.iter().map(|s| 1.0 / (s * s)).collect()
        }
    };
    Ok(Prepared {
        t: trace.times.clone(),
        y: trace.p_q.clone(),
        w,
        std: trace.population_std.clone(),
    })
}

struct RawFit {
    model: ExpSum,
    sigma: ExpSum,
    sse: f64,
    iterations: usize,
    converged: bool,
}

fn fit_components(
    data: &Prepared,
    k: usize,
    start: Option<ExpSum>,
    options: &FitOptions,
) -> Result<RawFit> {
    let (lo, hi) = init::rate_bounds(&data.t);
    let ln_bounds = ((lo * 1e-3).ln(), (hi * 1e2).ln());
    let starts: Vec<ExpSum> = match start {
        Some(s) => vec![s],
        None => {
            let (t, y, w) = (&data.t, &data.y, &data.w);
            match options.init {
                InitStrategy::PeelOff => init::peel_off(t, y, w, k).into_iter().collect(),
                InitStrategy::LogSpaced => init::log_spaced(t, y, w, k).into_iter().collect(),
                InitStrategy::Auto => init::peel_off(t, y, w, k)
                    .into_iter()
                    .chain(init::log_spaced(t, y, w, k))
                    .collect(),
            }
        }
    };
    let best = starts
        .iter()
        .map(|s| lm::levenberg_marquardt(&data.t, &data.y, &data.w, s, ln_bounds, options.max_iter))
        .filter(|o| o.sse.is_finite())
        .min_by(|a, b| {
            // Prefer converged runs, then the lower residual.
            (!a.converged, a.sse).partial_cmp(&(!b.converged, b.sse)).expect("finite")
        })
        .ok_or_else(|| Error::Fit("no usable starting point".into()))?;

    let n = data.t.len();
    let p = 2 * k + 1;
    // Residual variance scaling unless weights are absolute variances.
    let scale = match options.weighting {
        Weighting::Uniform => best.sse / (n.saturating_sub(p).max(1)) as f64,
        Weighting::Variance => 1.0,
    };
    let var = |i: usize| (best.inv_hessian[(i, i)] * scale).max(0.0).sqrt();
    let sigma = ExpSum {
        amps: (0..k).map(|c| var(2 * c)).collect(),
        rates: (0..k).map(|c| best.model.rates[c] * var(2 * c + 1)).collect(),
        offset: var(2 * k),
    };
    // Sort both by the fitted rates.
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&i, &j| best.model.rates[j].total_cmp(&best.model.rates[i]));
    let reorder = |s: &ExpSum| ExpSum {
        amps: idx.iter().map(|&i| s.amps[i]).collect(),
        rates: idx.iter().map(|&i| s.rates[i]).collect(),
        offset: s.offset,
    };
    Ok(RawFit {
        model: reorder(&best.model),
        sigma: reorder(&sigma),
        sse: best.sse,
        iterations: best.iterations,
        converged: best.converged,
    })
}

fn has_close_rates(rates: &[f64]) -> bool {
    rates
        .windows(2)
        .any(|w| (w[0] - w[1]).abs() <= DEGENERACY_TOLERANCE * w[0].abs().max(w[1].abs()))
}

/// Fits `k` components, falling back to fewer when rates coincide.
fn fit_with_fallback(
    data: &Prepared,
    k: usize,
    start: Option<ExpSum>,
    options: &FitOptions,
) -> Result<(RawFit, bool)> {
    let raw = fit_components(data, k, start, options)?;
    let range = data.y.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
        - data.y.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    // A component with numerically zero amplitude leaves its rate undefined;
    // one within two standard errors of zero is not resolved by the data.
    let vanishing = raw
        .model
        .amps
        .iter()
        .zip(&raw.sigma.amps)
        .any(|(a, s)| a.abs() <= 1e-9 * range || (s.is_finite() && a.abs() < 2.0 * s));
    if k > 1 && (vanishing || has_close_rates(&raw.model.rates)) {
        let (fewer, _) = fit_with_fallback(data, k - 1, None, options)?;
        return Ok((fewer, true));
    }
    Ok((raw, false))
}

/// Pads a fit with fewer components up to `k` with zero-amplitude,
/// zero-rate slots.
fn pad(mut s: ExpSum, k: usize) -> ExpSum {
    while s.amps.len() < k {
        s.amps.push(0.0);
        s.rates.push(0.0);
    }
    s
}

fn runs_z(residuals: &[f64]) -> f64 {
    let signs: Vec<bool> = residuals.iter().filter(|r| **r != 0.0).map(|r| *r > 0.0).collect();
    let n = signs.len() as f64;
    let pos = signs.iter().filter(|s| **s).count() as f64;
    let neg = n - pos;
    if pos == 0.0 || neg == 0.0 {
        return f64::NEG_INFINITY;
    }
    let runs = 1.0 + signs.windows(2).filter(|w| w[0] != w[1]).count() as f64;
    let mean = 2.0 * pos * neg / n + 1.0;
    let var = 2.0 * pos * neg * (2.0 * pos * neg - n) / (n * n * (n - 1.0));
    (runs - mean) / var.sqrt()
}

fn high_residual(data: &Prepared, model: &FitModel, n_params: usize) -> bool {
    let res: Vec<f64> = data.t.iter().zip(&data.y).map(|(&t, &y)| y - model.eval(t)).collect();
    if let Some(std) = &data.std {
        let dof = data.t.len().saturating_sub(n_params).max(1) as f64;
        let chi2: f64 = res.iter().zip(std).map(|(r, s)| (r / s).powi(2)).sum();
        return chi2 / dof > 3.0;
    }
    let range = data.y.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
        - data.y.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let rms = (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt();
    rms > 1e-6 * range && runs_z(&res) < -3.0
}

fn finish(
    data: &Prepared,
    raw: RawFit,
    degenerate: bool,
    k: usize,
    build: impl Fn(&ExpSum) -> FitModel,
    sigma_order: impl Fn(&ExpSum) -> Vec<f64>,
) -> FitResult {
    let model = build(&pad(raw.model, k));
    let std_errors = sigma_order(&pad(raw.sigma, k));
    let residual_rms = (raw.sse
        / data.w.iter().sum::<f64>().max(f64::MIN_POSITIVE))
    .sqrt();
    let high_residual = high_residual(data, &model, 2 * k + 1);
    FitResult {
        model,
        std_errors,
        residual_rms,
        converged: raw.converged,
        n_iterations: raw.iterations,
        degenerate,
        high_residual,
    }
}

/// `a e^(-Γ₁ t) + b e^(-Γt t) + c` by damped Gauss-Newton.
pub fn fit_biexp(trace: &DecayTrace, init: Option<BiexpModel>) -> Result<FitResult> {
    fit_biexp_with(trace, init, &FitOptions::default())
}

pub fn fit_biexp_with(
    trace: &DecayTrace,
    init: Option<BiexpModel>,
    options: &FitOptions,
) -> Result<FitResult> {
    let data = prepare(trace, 6, options.weighting)?;
    let start = init.map(|m| ExpSum {
        amps: vec![m.a, m.b],
        rates: vec![m.gamma_1, m.gamma_t],
        offset: m.c,
    });
    let (raw, degenerate) = fit_with_fallback(&data, 2, start, options)?;
    Ok(finish(
        &data,
        raw,
        degenerate,
        2,
        |s| {
            FitModel::Bi(BiexpModel {
                a: s.amps[0],
                gamma_1: s.rates[0],
                b: s.amps[1],
                gamma_t: s.rates[1],
                c: s.offset,
            })
        },
        |s| vec![s.amps[0], s.rates[0], s.amps[1], s.rates[1], s.offset],
    ))
}

/// `a e^(-Γ₁ t) + b e^(-Γt t) + b_l e^(-Γt^l t) + c`
pub fn fit_triexp(trace: &DecayTrace, init: Option<TriexpModel>) -> Result<FitResult> {
    fit_triexp_with(trace, init, &FitOptions::default())
}

pub fn fit_triexp_with(
    trace: &DecayTrace,
    init: Option<TriexpModel>,
    options: &FitOptions,
) -> Result<FitResult> {
    let data = prepare(trace, 8, options.weighting)?;
    let start = init.map(|m| ExpSum {
        amps: vec![m.a, m.b, m.b_l],
        rates: vec![m.gamma_1, m.gamma_t, m.gamma_t_l],
        offset: m.c,
    });
    let (raw, degenerate) = fit_with_fallback(&data, 3, start, options)?;
    Ok(finish(
        &data,
        raw,
        degenerate,
        3,
        |s| {
            FitModel::Tri(TriexpModel {
                a: s.amps[0],
                gamma_1: s.rates[0],
                b: s.amps[1],
                gamma_t: s.rates[1],
                b_l: s.amps[2],
                gamma_t_l: s.rates[2],
                c: s.offset,
            })
        },
        |s| vec![s.amps[0], s.rates[0], s.amps[1], s.rates[1], s.amps[2], s.rates[2], s.offset],
    ))
}

/// TLS-induced qubit decay from the slow amplitude,
/// `Γq^TLS = b Γ₁ / (p_t0 - c)`, with the fitted offset standing in for the
/// thermal population.
pub fn gamma_q_tls_estimate(fit: &FitResult, p_t0: f64) -> Result<f64> {
    let excess = p_t0 - fit.model.c();
    if !(excess > 0.0) {
        return Err(domain(format!(
            "initial TLS population {p_t0} does not exceed the fitted equilibrium {}",
            fit.model.c()
        )));
    }
    Ok(fit.model.b() * fit.model.gamma_1() / excess)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Simulated,
    Ingested(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceBundle {
    pub traces: Vec<DecayTrace>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowFlag {
    /// `1/Γt` is under the detection floor and is not reported.
    BelowDetectionLimit,
    Degenerate,
    NotConverged,
    HighResidual,
    FitFailed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeRow {
    /// Probe angular frequency (rad/s), when the trace records it.
    pub omega: Option<f64>,
    pub inv_gamma_1: Option<f64>,
    pub inv_gamma_1_err: Option<f64>,
    pub inv_gamma_t: Option<f64>,
    pub inv_gamma_t_err: Option<f64>,
    pub b: Option<f64>,
    pub b_err: Option<f64>,
    /// Needs the initial TLS population in the trace metadata.
    pub gamma_q_tls: Option<f64>,
    pub flags: Vec<RowFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LifetimeOptions {
    pub fit: FitOptions,
    /// Overrides the per-trace floor of three sampling intervals.
    pub detection_floor: Option<f64>,
}

/// One biexponential fit per trace, in bundle order.
pub fn lifetime_vs_frequency(bundle: &TraceBundle, options: &LifetimeOptions) -> Vec<LifetimeRow> {
    bundle.traces.par_iter().map(|trace| lifetime_row(trace, options)).collect()
}

fn lifetime_row(trace: &DecayTrace, options: &LifetimeOptions) -> LifetimeRow {
    let mut row = LifetimeRow {
        omega: trace.meta.frequency,
        inv_gamma_1: None,
        inv_gamma_1_err: None,
        inv_gamma_t: None,
        inv_gamma_t_err: None,
        b: None,
        b_err: None,
        gamma_q_tls: None,
        flags: Vec::new(),
    };
    let fit = match fit_biexp_with(trace, None, &options.fit) {
        Ok(f) => f,
        Err(e) => {
            row.flags.push(RowFlag::FitFailed(e.to_string()));
            return row;
        }
    };
    if !fit.converged {
        row.flags.push(RowFlag::NotConverged);
    }
    if fit.degenerate {
        row.flags.push(RowFlag::Degenerate);
    }
    if fit.high_residual {
        row.flags.push(RowFlag::HighResidual);
    }
    let g1 = fit.model.gamma_1();
    let sg1 = fit.std_error("gamma_1").unwrap_or(0.0);
    row.inv_gamma_1 = Some(1.0 / g1);
    row.inv_gamma_1_err = Some(sg1 / (g1 * g1));
    let floor = options
        .detection_floor
        .or_else(|| trace.resolution().map(|r| DETECTION_FACTOR * r))
        .unwrap_or(0.0);
    let gt = fit.model.gamma_t();
    if fit.degenerate || gt <= 0.0 || 1.0 / gt < floor {
        row.flags.push(RowFlag::BelowDetectionLimit);
        row.b = Some(0.0);
        row.b_err = Some(0.0);
        row.gamma_q_tls = Some(0.0);
        return row;
    }
    let sgt = fit.std_error("gamma_t").unwrap_or(0.0);
    row.inv_gamma_t = Some(1.0 / gt);
    row.inv_gamma_t_err = Some(sgt / (gt * gt));
    row.b = Some(fit.model.b());
    row.b_err = fit.std_error("b");
    row.gamma_q_tls = trace
        .meta
        .tls_population
        .and_then(|p| gamma_q_tls_estimate(&fit, p).ok());
    row
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;
use tlsbath::dynamics::{DecayTrace, ProbeState, TraceMeta};
use tlsbath::fitting::{
    fit_biexp_with, fit_triexp_with, read_trace_csv, write_trace_csv, FitResult, LifetimeOptions,
    DETECTION_FACTOR,
};
use tlsbath::model::QubitParams;
use tlsbath::regimes::{frequency_model, lifetime_map};
use tlsbath::sequence::{
    holeburn_saturation_curve, holeburn_spectrum, relaxation_scan, BathSpec, SequenceRunner,
};
use tlsbath::units::to_hz;

use crate::config::{ConfigError, ModelChoice, RunConfig};
use crate::output::OutputDir;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("input error: {0}")]
    Input(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Fit(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<tlsbath::Error> for CliError {
    fn from(e: tlsbath::Error) -> Self {
        use tlsbath::Error as E;
        match e {
            E::Domain(_) | E::Argument(_) => CliError::Config(ConfigError::new("", e)),
            E::Parse { .. } => CliError::Input(e.to_string()),
            E::Fit(_) => CliError::Fit(e.to_string()),
            E::Io(io) => CliError::Io(io),
            E::Numeric(_) => CliError::Numeric(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn label(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Resolved inputs shared by every subcommand.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub format: Format,
}

impl Context {
    fn output(&self) -> Result<OutputDir> {
        Ok(OutputDir::create(&self.out)?)
    }

    fn finish(&self, dir: OutputDir, command: &str) -> Result<()> {
        dir.finish(command, &self.config.hash(), self.config.seed, self.format.label())?;
        Ok(())
    }
}

#[derive(Serialize)]
struct TraceJson<'a> {
    frequency_hz: Option<f64>,
    probe_state: Option<&'static str>,
    sequence_id: Option<&'a str>,
    tls_population: Option<f64>,
    time_s: &'a [f64],
    population: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    population_std: Option<&'a [f64]>,
}

fn trace_json(t: &DecayTrace) -> TraceJson<'_> {
    TraceJson {
        frequency_hz: t.meta.frequency.map(to_hz),
        probe_state: t.meta.probe_state.map(ProbeState::label),
        sequence_id: t.meta.sequence_id.as_deref(),
        tls_population: t.meta.tls_population,
        time_s: &t.times,
        population: &t.p_q,
        population_std: t.population_std.as_deref(),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

fn write_traces(dir: &mut OutputDir, format: Format, stem: &str, traces: &[DecayTrace]) -> Result<()> {
    match format {
        Format::Csv => {
            for (i, t) in traces.iter().enumerate() {
                let mut buf = Vec::new();
                write_trace_csv(t, &mut buf)?;
                dir.write(&format!("{stem}_{i:03}.csv"), &buf)?;
            }
        }
        Format::Json => {
            let all: Vec<_> = traces.iter().map(trace_json).collect();
            dir.write(&format!("{stem}.json"), &json_bytes(&all))?;
        }
    }
    Ok(())
}

/// Thermal bath, qubit prepared in `state`, free decay at `omega`.
fn free_decay(
    bath: &BathSpec,
    qubit: &QubitParams,
    omega: f64,
    state: ProbeState,
    times: &[f64],
) -> Result<DecayTrace> {
    let mut runner = SequenceRunner::new(bath, *qubit)?;
    let mut s = runner.initial_state();
    s[0] = state.population();
    let p = runner.sample(omega, &s, times)?;
    Ok(DecayTrace::new(times.to_vec(), p)?.with_meta(TraceMeta {
        frequency: Some(omega),
        probe_state: Some(state),
        sequence_id: Some("free-decay".into()),
        tls_population: None,
    }))
}

/// Adds Gaussian population noise, trace by trace in order, from one
/// generator seeded with `seed`.
fn add_noise(traces: &mut [DecayTrace], sigma: f64, seed: u64) {
    if sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma checked at load");
    for t in traces {
        for p in &mut t.p_q {
            *p += normal.sample(&mut rng);
        }
        t.population_std = Some(vec![sigma; t.len()]);
    }
}

pub fn simulate(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let qubit = cfg.qubit_params()?;
    let bath = cfg.bath_spec()?;
    let times = cfg.delays()?;
    let freqs = cfg.simulate_frequencies()?;
    let block = cfg.simulate.as_ref().expect("checked by delays()");
    let mut traces = if cfg.sequence.is_some() {
        let spec = cfg.holeburn_spec(Some(times))?;
        relaxation_scan(&spec, &freqs, &bath, &qubit)?
    } else {
        let state = block.initial_state.into();
        freqs
            .par_iter()
            .map(|&w| free_decay(&bath, &qubit, w, state, &times))
            .collect::<Result<Vec<_>>>()?
    };
    add_noise(&mut traces, block.noise, cfg.seed);
    let mut dir = ctx.output()?;
    write_traces(&mut dir, ctx.format, "trace", &traces)?;
    ctx.finish(dir, "simulate")?;
    println!("wrote {} trace(s) to {}", traces.len(), ctx.out.display());
    Ok(())
}

#[derive(Serialize)]
struct SaturationPoint {
    pulses: usize,
    p_eq: f64,
}

#[derive(Serialize)]
struct SpectrumPoint {
    frequency_hz: f64,
    p_eq: f64,
}

#[derive(Serialize)]
struct SpectrumJson {
    points: Vec<SpectrumPoint>,
    peak_hz: f64,
    fwhm_hz: Option<f64>,
}

#[derive(Serialize)]
struct HoleburnJson<'a> {
    saturation: Vec<SaturationPoint>,
    spectrum: Option<SpectrumJson>,
    traces: Vec<TraceJson<'a>>,
}

pub fn holeburn(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let qubit = cfg.qubit_params()?;
    let bath = cfg.bath_spec()?;
    let spec = cfg.holeburn_spec(None)?;
    let block = cfg.sequence_block()?;
    let counts = match &block.saturation_pulses {
        Some(c) => c.clone(),
        None => {
            let mut c: Vec<usize> = (0..=10).map(|i| i * block.pulses / 10).collect();
            c.dedup();
            c
        }
    };
    let saturation = holeburn_saturation_curve(&spec, &bath, &qubit, &counts)?;
    let spectrum = match &block.probe_frequencies {
        Some(_) => {
            let grid = cfg.probe_frequencies()?;
            Some(holeburn_spectrum(&spec, &grid, &bath, &qubit)?)
        }
        None => None,
    };
    let traces = if spec.tau_d_grid.is_empty() {
        Vec::new()
    } else {
        let freqs = match &block.scan_frequencies {
            Some(f) => f.iter().map(|f| f.angular()).collect(),
            None => vec![spec.omega_q],
        };
        relaxation_scan(&spec, &freqs, &bath, &qubit)?
    };

    let mut dir = ctx.output()?;
    match ctx.format {
        Format::Csv => {
            let mut s = String::from("pulses,p_eq\n");
            for (n, p) in &saturation {
                writeln!(s, "{n},{p:e}").unwrap();
            }
            dir.write("saturation.csv", s.as_bytes())?;
            if let Some(sp) = &spectrum {
                let mut s = String::from("frequency_hz,p_eq\n");
                for (w, p) in &sp.points {
                    writeln!(s, "{:e},{p:e}", to_hz(*w)).unwrap();
                }
                dir.write("spectrum.csv", s.as_bytes())?;
            }
            write_traces(&mut dir, Format::Csv, "relaxation", &traces)?;
        }
        Format::Json => {
            let doc = HoleburnJson {
                saturation: saturation.iter().map(|&(pulses, p_eq)| SaturationPoint { pulses, p_eq }).collect(),
                spectrum: spectrum.as_ref().map(|sp| SpectrumJson {
                    points: sp
                        .points
                        .iter()
                        .map(|&(w, p_eq)| SpectrumPoint { frequency_hz: to_hz(w), p_eq })
                        .collect(),
                    peak_hz: to_hz(sp.peak),
                    fwhm_hz: sp.fwhm.map(to_hz),
                }),
                traces: traces.iter().map(trace_json).collect(),
            };
            dir.write("holeburn.json", &json_bytes(&doc))?;
        }
    }
    ctx.finish(dir, "holeburn")?;
    if let Some((n, p)) = saturation.iter().max_by_key(|(n, _)| *n) {
        println!("plateau after {n} pulses: p_eq = {p:.4}");
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct Param {
    value: f64,
    std_error: f64,
    unit: &'static str,
}

#[derive(Debug, Clone, Serialize)]
struct Provenance {
    config_hash: String,
    seed: u64,
}

#[derive(Debug, Clone, Serialize)]
struct FitEntry {
    source: String,
    frequency_hz: Option<f64>,
    model: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    params: BTreeMap<String, Param>,
    residual_rms: Option<f64>,
    converged: bool,
    n_iterations: usize,
    flags: Vec<&'static str>,
    provenance: Provenance,
}

/// Lifetime in µs below 1 ms, else in ms.
fn lifetime(rate: f64, rate_err: f64) -> Param {
    let tau = 1.0 / rate;
    let err = rate_err / (rate * rate);
    if tau < 1e-3 {
        Param { value: tau * 1e6, std_error: err * 1e6, unit: "us" }
    } else {
        Param { value: tau * 1e3, std_error: err * 1e3, unit: "ms" }
    }
}

fn params(fit: &FitResult) -> BTreeMap<String, Param> {
    let mut out = BTreeMap::new();
    for ((name, value), &err) in fit.model.params().into_iter().zip(&fit.std_errors) {
        if let Some(rate_name) = name.strip_prefix("gamma_") {
            out.insert(name.to_string(), Param { value, std_error: err, unit: "1/s" });
            if value > 0.0 {
                out.insert(format!("inv_gamma_{rate_name}"), lifetime(value, err));
            }
        } else {
            out.insert(name.to_string(), Param { value, std_error: err, unit: "1" });
        }
    }
    out
}

fn fit_flags(fit: &FitResult, trace: &DecayTrace, options: &LifetimeOptions) -> Vec<&'static str> {
    let mut flags = Vec::new();
    if !fit.converged {
        flags.push("not-converged");
    }
    if fit.degenerate {
        flags.push("degenerate");
    }
    if fit.high_residual {
        flags.push("high-residual");
    }
    let floor = options
        .detection_floor
        .or_else(|| trace.resolution().map(|r| DETECTION_FACTOR * r));
    let gamma_t = fit.model.gamma_t();
    if gamma_t > 0.0 && floor.is_some_and(|f| 1.0 / gamma_t < f) {
        flags.push("below-detection-limit");
    }
    flags
}

/// Files named on the command line; directories contribute their `.csv`
/// files in name order.
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<_> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|e| e == "csv"))
                .collect();
            if found.is_empty() {
                return Err(CliError::Input(format!("no .csv traces in {}", p.display())));
            }
            found.sort();
            files.extend(found);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(CliError::Input(format!("{} does not exist", p.display())));
        }
    }
    if files.is_empty() {
        return Err(CliError::Input("no input traces".into()));
    }
    Ok(files)
}

fn fit_one(
    path: &Path,
    model: ModelChoice,
    options: &LifetimeOptions,
    provenance: &Provenance,
) -> (FitEntry, Option<CliError>) {
    let mut entry = FitEntry {
        source: path.display().to_string(),
        frequency_hz: None,
        model: match model {
            ModelChoice::Bi => "bi",
            ModelChoice::Tri => "tri",
        },
        error: None,
        params: BTreeMap::new(),
        residual_rms: None,
        converged: false,
        n_iterations: 0,
        flags: Vec::new(),
        provenance: provenance.clone(),
    };
    let trace = match std::fs::File::open(path)
        .map_err(tlsbath::Error::from)
        .and_then(read_trace_csv)
    {
        Ok(t) => t,
        Err(e) => {
            entry.error = Some(e.to_string());
            let err = match e {
                tlsbath::Error::Io(io) => CliError::Io(io),
                other => CliError::Input(format!("{}: {other}", path.display())),
            };
            return (entry, Some(err));
        }
    };
    entry.frequency_hz = trace.meta.frequency.map(to_hz);
    let fit = match model {
        ModelChoice::Bi => fit_biexp_with(&trace, None, &options.fit),
        ModelChoice::Tri => fit_triexp_with(&trace, None, &options.fit),
    };
    match fit {
        Ok(fit) => {
            entry.params = params(&fit);
            entry.residual_rms = Some(fit.residual_rms);
            entry.converged = fit.converged;
            entry.n_iterations = fit.n_iterations;
            entry.flags = fit_flags(&fit, &trace, options);
            let err = (!fit.converged)
                .then(|| CliError::Fit(format!("{}: fit did not converge", path.display())));
            (entry, err)
        }
        Err(e) => {
            entry.error = Some(e.to_string());
            entry.flags.push("fit-failed");
            let err = match CliError::from(e) {
                CliError::Config(c) => CliError::Fit(format!("{}: {c}", path.display())),
                other => other,
            };
            (entry, Some(err))
        }
    }
}

fn summary(e: &FitEntry) -> String {
    if let Some(err) = &e.error {
        return format!("{}: error: {err}", e.source);
    }
    let mut s = e.source.clone();
    for name in ["inv_gamma_1", "inv_gamma_t", "inv_gamma_t_l"] {
        if let Some(p) = e.params.get(name) {
            write!(s, "  1/{} = {:.4} {}", &name[4..], p.value, p.unit).unwrap();
        }
    }
    if !e.flags.is_empty() {
        write!(s, "  [{}]", e.flags.join(", ")).unwrap();
    }
    s
}

/// Fits every trace and writes `results.json`; the first error by exit
/// severity is returned after all results are on disk.
pub fn fit(ctx: &Context, inputs: &[PathBuf], model: Option<ModelChoice>) -> Result<()> {
    let cfg = &ctx.config;
    let options = cfg.fit_options()?;
    let model = model.unwrap_or(cfg.fit.model);
    let files = expand_inputs(inputs)?;
    let provenance = Provenance { config_hash: cfg.hash(), seed: cfg.seed };
    let outcomes: Vec<_> = files
        .par_iter()
        .map(|f| fit_one(f, model, &options, &provenance))
        .collect();

    let entries: Vec<&FitEntry> = outcomes.iter().map(|(e, _)| e).collect();
    let mut dir = ctx.output()?;
    dir.write("results.json", &json_bytes(&entries))?;
    if ctx.format == Format::Csv {
        let mut s = String::from("source,frequency_hz,inv_gamma_1_s,inv_gamma_t_s,b,residual_rms,flags\n");
        for e in &entries {
            let tau = |name: &str| {
                e.params
                    .get(name)
                    .map(|p| format!("{:e}", p.value * if p.unit == "us" { 1e-6 } else { 1e-3 }))
                    .unwrap_or_default()
            };
            let opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                e.source,
                opt(e.frequency_hz),
                tau("inv_gamma_1"),
                tau("inv_gamma_t"),
                opt(e.params.get("b").map(|p| p.value)),
                opt(e.residual_rms),
                e.flags.join(";")
            )
            .unwrap();
        }
        dir.write("lifetimes.csv", s.as_bytes())?;
    }
    ctx.finish(dir, "fit")?;
    for e in &entries {
        println!("{}", summary(e));
    }
    match outcomes.into_iter().filter_map(|(_, e)| e).max_by_key(CliError::exit_code) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct MapRow {
    g_over_2pi_hz: f64,
    inv_gamma_t_s: f64,
    inv_gamma_1_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    inv_gamma_1_avg_s: Option<f64>,
    regime: &'static str,
    b: f64,
}

pub fn map(ctx: &Context) -> Result<()> {
    let spec = ctx.config.map_spec()?;
    let map = lifetime_map(&spec)?;
    let rows: Vec<MapRow> = map
        .cells
        .iter()
        .map(|c| MapRow {
            g_over_2pi_hz: to_hz(c.g),
            inv_gamma_t_s: 1.0 / c.gamma_t,
            inv_gamma_1_s: c.inv_gamma_1,
            inv_gamma_1_avg_s: c.inv_gamma_1_avg,
            regime: c.regime.label(),
            b: c.b,
        })
        .collect();
    let mut dir = ctx.output()?;
    match ctx.format {
        Format::Csv => {
            let avg = spec.average_offset;
            let mut s = String::from("g_over_2pi_hz,inv_gamma_t_s,inv_gamma_1_s,regime,b");
            s.push_str(if avg { ",inv_gamma_1_avg_s\n" } else { "\n" });
            for r in &rows {
                write!(s, "{:e},{:e},{:e},{},{:e}", r.g_over_2pi_hz, r.inv_gamma_t_s, r.inv_gamma_1_s, r.regime, r.b)
                    .unwrap();
                if let Some(a) = r.inv_gamma_1_avg_s.filter(|_| avg) {
                    write!(s, ",{a:e}").unwrap();
                }
                s.push('\n');
            }
            dir.write("map.csv", s.as_bytes())?;
        }
        Format::Json => dir.write("map.json", &json_bytes(&rows))?,
    }
    ctx.finish(dir, "map")?;
    println!("wrote {} x {} map to {}", map.n_g, map.n_gamma_t, ctx.out.display());
    Ok(())
}

#[derive(Serialize)]
struct FreqRow {
    omega_over_2pi_hz: f64,
    inv_gamma_1_s: f64,
}

pub fn freq_model(ctx: &Context) -> Result<()> {
    let spec = ctx.config.freq_model_spec()?;
    let rows: Vec<FreqRow> = frequency_model(&spec)?
        .into_iter()
        .map(|(w, t)| FreqRow { omega_over_2pi_hz: to_hz(w), inv_gamma_1_s: t })
        .collect();
    let mut dir = ctx.output()?;
    match ctx.format {
        Format::Csv => {
            let mut s = String::from("omega_over_2pi_hz,inv_gamma_1_s\n");
            for r in &rows {
                writeln!(s, "{:e},{:e}", r.omega_over_2pi_hz, r.inv_gamma_1_s).unwrap();
            }
            dir.write("freq.csv", s.as_bytes())?;
        }
        Format::Json => dir.write("freq.json", &json_bytes(&rows))?,
    }
    ctx.finish(dir, "freq-model")?;
    println!("wrote {} frequencies to {}", rows.len(), ctx.out.display());
    Ok(())
}

pub fn validate_config(ctx: &Context) -> Result<()> {
    ctx.config.check()?;
    print!("{}", ctx.config.to_toml());
    Ok(())
}

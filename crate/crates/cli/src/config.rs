//! Run configuration: TOML, or JSON with the same schema.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tlsbath::dynamics::ProbeState;
use tlsbath::fitting::{FitOptions, InitStrategy, LifetimeOptions, Weighting};
use tlsbath::model::{MergemonGeometry, QubitParams, DEFAULT_P_TH};
use tlsbath::regimes::{
    log_space, CouplingLaw, DensityLaw, FreqModelSpec, MapSpec, OffsetPolicy,
};
use tlsbath::sequence::{
    BathSpec, BathTls, CombBath, HoleburnSpec, LifetimeProfile, LongLived, DEFAULT_PLATEAU_DELAY,
    DEFAULT_TAU_R,
};
use tlsbath::units::density_per_hz_to_angular;

use crate::quantity::{
    Density, Duration, Frequency, FrequencyKind, Kind, Quantity, Rate, TimeKind, Unit,
};

/// A config problem, located by its field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { path: path.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit: Option<QubitBlock>,
    #[serde(default)]
    pub bath: BathBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceBlock>,
    #[serde(default)]
    pub fit: FitBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_model: Option<FreqModelBlock>,
}

fn default_output() -> String {
    "out".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output: default_output(),
            qubit: None,
            bath: BathBlock::default(),
            simulate: None,
            sequence: None,
            fit: FitBlock::default(),
            map: None,
            frequency_model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitBlock {
    pub frequency: Frequency,
    #[serde(default = "zero_rate")]
    pub gamma_q: Rate,
    #[serde(default = "default_p_th")]
    pub thermal_population: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutBlock>,
}

fn zero_rate() -> Rate {
    Rate::new(0.0, Unit::Hz)
}

fn default_p_th() -> f64 {
    DEFAULT_P_TH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutBlock {
    pub frequency: Frequency,
    /// Resonator linewidth κ/2π.
    pub linewidth: Frequency,
    pub coupling: Frequency,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum BathBlock {
    #[default]
    Empty,
    Resonant {
        count: usize,
        frequency: Frequency,
        coupling: Frequency,
        gamma_t: Rate,
    },
    Comb {
        anchor: Frequency,
        spacing: Frequency,
        half_width: usize,
        coupling: Frequency,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma_t: Option<Rate>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        band_edge: Option<BandEdgeBlock>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        long_lived: Option<LongLivedBlock>,
    },
    Explicit {
        sites: Vec<SiteBlock>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandEdgeBlock {
    pub edge: Frequency,
    /// Rate of sites above the edge.
    pub inside: Rate,
    pub outside: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongLivedBlock {
    pub fraction: f64,
    pub gamma_t: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteBlock {
    pub frequency: Frequency,
    pub coupling: Frequency,
    pub gamma_t: Rate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// `points` values from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "K: Kind", serialize = ""))]
pub struct Grid<K: Kind> {
    pub start: Quantity<K>,
    pub stop: Quantity<K>,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl<K: Kind> Grid<K> {
    fn values(&self, path: &str, si: impl Fn(&Quantity<K>) -> f64) -> Result<Vec<f64>> {
        let (lo, hi) = (si(&self.start), si(&self.stop));
        if self.points == 0 {
            return Err(ConfigError::new(format!("{path}.points"), "must be >= 1"));
        }
        if self.points == 1 {
            return Ok(vec![lo]);
        }
        match self.spacing {
            Spacing::Log => {
                if !(lo > 0.0 && hi > 0.0) {
                    return Err(ConfigError::new(path, "log spacing needs positive endpoints"));
                }
                Ok(log_space(lo, hi, self.points))
            }
            Spacing::Linear => {
                let n = (self.points - 1) as f64;
                Ok((0..self.points).map(|i| lo + (hi - lo) * i as f64 / n).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StateLabel {
    #[serde(rename = "g")]
    #[default]
    Ground,
    #[serde(rename = "e")]
    Excited,
}

impl From<StateLabel> for ProbeState {
    fn from(s: StateLabel) -> Self {
        match s {
            StateLabel::Ground => ProbeState::Ground,
            StateLabel::Excited => ProbeState::Excited,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub delays: Grid<TimeKind>,
    #[serde(default = "excited")]
    pub initial_state: StateLabel,
    /// Standard deviation of additive Gaussian population noise.
    #[serde(default)]
    pub noise: f64,
    /// Qubit frequencies; defaults to the qubit's own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<Frequency>>,
}

fn excited() -> StateLabel {
    StateLabel::Excited
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceBlock {
    /// Where the qubit is excited before each relaxation.
    pub park_frequency: Frequency,
    pub interaction_frequency: Frequency,
    pub pulses: usize,
    #[serde(default = "default_tau_r")]
    pub relaxation_wait: Duration,
    #[serde(default)]
    pub probe_state: StateLabel,
    #[serde(default = "default_plateau")]
    pub plateau_delay: Duration,
    #[serde(default)]
    pub detuned_delay: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interleave: Option<Vec<Frequency>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<Grid<TimeKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation_pulses: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_frequencies: Option<Grid<FrequencyKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_frequencies: Option<Vec<Frequency>>,
}

fn default_tau_r() -> Duration {
    Duration::new(DEFAULT_TAU_R * 1e6, Unit::Us)
}

fn default_plateau() -> Duration {
    Duration::new(DEFAULT_PLATEAU_DELAY * 1e6, Unit::Us)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    #[default]
    Bi,
    Tri,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    #[serde(default)]
    pub model: ModelChoice,
    #[serde(default)]
    pub weighting: Weighting,
    #[serde(default)]
    pub init: InitStrategy,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Overrides the floor of three sampling intervals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_floor: Option<Duration>,
}

fn default_max_iter() -> usize {
    FitOptions::default().max_iter
}

impl Default for FitBlock {
    fn default() -> Self {
        Self {
            model: ModelChoice::Bi,
            weighting: Weighting::Uniform,
            init: InitStrategy::Auto,
            max_iter: default_max_iter(),
            detection_floor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DensityBlock {
    /// Reference merged-element geometry, `ρ ∝ 1/g²`.
    Mergemon,
    Fixed(Density),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapBlock {
    pub offset_fraction: Option<f64>,
    pub average_offset: bool,
    pub gamma_q: Rate,
    pub coupling: Grid<FrequencyKind>,
    /// TLS lifetimes `1/Γt`.
    pub lifetime: Grid<TimeKind>,
    pub density: DensityBlock,
}

impl Default for MapBlock {
    fn default() -> Self {
        Self {
            offset_fraction: None,
            average_offset: false,
            gamma_q: zero_rate(),
            coupling: Grid {
                start: Frequency::new(10.0, Unit::KHz),
                stop: Frequency::new(100.0, Unit::MHz),
                points: 100,
                spacing: Spacing::Log,
            },
            lifetime: Grid {
                start: Duration::new(10.0, Unit::Ns),
                stop: Duration::new(10.0, Unit::Ms),
                points: 100,
                spacing: Spacing::Log,
            },
            density: DensityBlock::Mergemon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum CouplingBlock {
    /// `g/2π = a ω²`; `a` per unit frequency with ω in that unit (rad/µs
    /// for `/MHz`).
    Quadratic(Density),
    /// Square-root law through the quadratic one at `match_at`.
    Sqrt { coefficient: Density, match_at: Frequency },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreqModelBlock {
    pub edge: Frequency,
    pub gamma_t_inside: Rate,
    pub gamma_t_outside: Rate,
    pub density: Density,
    pub offset_fraction: Option<f64>,
    pub frequencies: Grid<FrequencyKind>,
    pub coupling: CouplingBlock,
}

impl Default for FreqModelBlock {
    fn default() -> Self {
        Self {
            edge: Frequency::new(5.2, Unit::GHz),
            gamma_t_inside: Rate::new(34.0, Unit::Us),
            gamma_t_outside: Rate::new(100.0, Unit::Ns),
            density: Density::new(20.0, Unit::PerMHz),
            offset_fraction: None,
            frequencies: Grid {
                start: Frequency::new(4.0, Unit::GHz),
                stop: Frequency::new(6.5, Unit::GHz),
                points: 251,
                spacing: Spacing::Linear,
            },
            coupling: CouplingBlock::Quadratic(Density::new(5e-11, Unit::PerMHz)),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json")
            || text.trim_start().starts_with('{');
        if json {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("", e))?;
        serde_path_to_error::deserialize(de).map_err(located)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(located)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&bytes))
    }

    /// Builds every present section so that errors surface before any run.
    pub fn check(&self) -> Result<()> {
        if self.qubit.is_some() {
            self.qubit_params()?;
            self.bath_spec()?;
        }
        if let Some(s) = &self.simulate {
            if !(s.noise >= 0.0 && s.noise.is_finite()) {
                return Err(ConfigError::new("simulate.noise", "must be finite and >= 0"));
            }
            self.delays()?;
        }
        if self.sequence.is_some() {
            self.holeburn_spec(None)?;
        }
        self.fit_options()?;
        if self.map.is_some() {
            self.map_spec()?;
        }
        if self.frequency_model.is_some() {
            self.freq_model_spec()?;
        }
        Ok(())
    }

    pub fn qubit_params(&self) -> Result<QubitParams> {
        let q = self.qubit.as_ref().ok_or_else(|| ConfigError::new("qubit", "section is missing"))?;
        let mut params =
            QubitParams::new(q.frequency.angular(), q.gamma_q.rate()).with_p_th(q.thermal_population);
        if let Some(r) = &q.readout {
            params = params.with_readout(
                r.frequency.angular(),
                r.linewidth.angular(),
                r.coupling.angular(),
            );
        }
        params.validate().map_err(|e| ConfigError::new("qubit", e))?;
        Ok(params)
    }

    pub fn bath_spec(&self) -> Result<BathSpec> {
        let spec = match &self.bath {
            BathBlock::Empty => BathSpec::explicit(Vec::new()),
            BathBlock::Resonant { count, frequency, coupling, gamma_t } => BathSpec::resonant(
                frequency.angular(),
                *count,
                coupling.angular(),
                gamma_t.rate(),
            ),
            BathBlock::Comb { anchor, spacing, half_width, coupling, gamma_t, band_edge, long_lived } => {
                let lifetime = match (gamma_t, band_edge) {
                    (Some(r), None) => LifetimeProfile::Uniform(r.rate()),
                    (None, Some(b)) => LifetimeProfile::BandEdge {
                        edge: b.edge.angular(),
                        inside: b.inside.rate(),
                        outside: b.outside.rate(),
                    },
                    _ => {
                        return Err(ConfigError::new(
                            "bath",
                            "give exactly one of gamma_t and band_edge",
                        ))
                    }
                };
                BathSpec::comb(&CombBath {
                    anchor: anchor.angular(),
                    spacing: spacing.angular(),
                    half_width: *half_width,
                    g: coupling.angular(),
                    lifetime,
                    long_lived: long_lived
                        .as_ref()
                        .map(|l| LongLived { fraction: l.fraction, gamma_t: l.gamma_t.rate() }),
                })
                .map_err(|e| ConfigError::new("bath", e))?
            }
            BathBlock::Explicit { sites } => BathSpec::explicit(
                sites
                    .iter()
                    .map(|s| BathTls {
                        omega: s.frequency.angular(),
                        g: s.coupling.angular(),
                        gamma_t: s.gamma_t.rate(),
                        p: s.population,
                    })
                    .collect(),
            ),
        };
        spec.validate().map_err(|e| ConfigError::new("bath", e))?;
        Ok(spec)
    }

    fn simulate_block(&self) -> Result<&SimulateBlock> {
        self.simulate.as_ref().ok_or_else(|| ConfigError::new("simulate", "section is missing"))
    }

    pub fn delays(&self) -> Result<Vec<f64>> {
        delay_grid(&self.simulate_block()?.delays, "simulate.delays")
    }

    /// Qubit frequencies for `simulate` (rad/s).
    pub fn simulate_frequencies(&self) -> Result<Vec<f64>> {
        match &self.simulate_block()?.frequencies {
            Some(f) if f.is_empty() => {
                Err(ConfigError::new("simulate.frequencies", "must not be empty"))
            }
            Some(f) => Ok(f.iter().map(Frequency::angular).collect()),
            None => Ok(vec![self.qubit_params()?.omega_q]),
        }
    }

    pub fn sequence_block(&self) -> Result<&SequenceBlock> {
        self.sequence.as_ref().ok_or_else(|| ConfigError::new("sequence", "section is missing"))
    }

    /// The hole-burning protocol, with `delays` overriding the section's own.
    pub fn holeburn_spec(&self, delays: Option<Vec<f64>>) -> Result<HoleburnSpec> {
        let s = self.sequence_block()?;
        let mut spec =
            HoleburnSpec::new(s.park_frequency.angular(), s.interaction_frequency.angular(), s.pulses);
        spec.tau_r = s.relaxation_wait.seconds();
        spec.probe_state = s.probe_state.into();
        spec.plateau_delay = s.plateau_delay.seconds();
        spec.detuned_delay = s.detuned_delay;
        spec.interleave = s.interleave.as_ref().map(|v| v.iter().map(Frequency::angular).collect());
        spec.tau_d_grid = match (delays, &s.delays) {
            (Some(d), _) => d,
            (None, Some(g)) => delay_grid(g, "sequence.delays")?,
            (None, None) => Vec::new(),
        };
        spec.validate().map_err(|e| ConfigError::new("sequence", e))?;
        if s.probe_frequencies.is_some() {
            self.probe_frequencies()?;
        }
        Ok(spec)
    }

    /// Probe grid of the hole-burning spectrum (rad/s).
    pub fn probe_frequencies(&self) -> Result<Vec<f64>> {
        match &self.sequence_block()?.probe_frequencies {
            Some(g) => g.values("sequence.probe_frequencies", Frequency::angular),
            None => Err(ConfigError::new("sequence.probe_frequencies", "is missing")),
        }
    }

    pub fn fit_options(&self) -> Result<LifetimeOptions> {
        let f = &self.fit;
        if f.max_iter == 0 {
            return Err(ConfigError::new("fit.max_iter", "must be >= 1"));
        }
        let floor = f.detection_floor.map(|d| d.seconds());
        if floor.is_some_and(|v| !(v >= 0.0)) {
            return Err(ConfigError::new("fit.detection_floor", "must be >= 0"));
        }
        Ok(LifetimeOptions {
            fit: FitOptions { weighting: f.weighting, init: f.init, max_iter: f.max_iter },
            detection_floor: floor,
        })
    }

    pub fn map_spec(&self) -> Result<MapSpec> {
        let default = MapBlock::default();
        let m = self.map.as_ref().unwrap_or(&default);
        let g_grid = m.coupling.values("map.coupling", Frequency::angular)?;
        let gamma_t_grid = m
            .lifetime
            .values("map.lifetime", Duration::seconds)?
            .into_iter()
            .map(|tau| 1.0 / tau)
            .collect();
        let density = match &m.density {
            DensityBlock::Mergemon => DensityLaw::Mergemon { geometry: MergemonGeometry::reference() },
            DensityBlock::Fixed(value) => {
                DensityLaw::Fixed { rho: density_per_hz_to_angular(value.per_hz()) }
            }
        };
        let spec = MapSpec {
            g_grid,
            gamma_t_grid,
            density,
            offset: offset(m.offset_fraction),
            average_offset: m.average_offset,
            gamma_q: m.gamma_q.rate(),
        };
        spec.validate().map_err(|e| ConfigError::new("map", e))?;
        Ok(spec)
    }

    pub fn freq_model_spec(&self) -> Result<FreqModelSpec> {
        let default = FreqModelBlock::default();
        let f = self.frequency_model.as_ref().unwrap_or(&default);
        let coupling = match &f.coupling {
            CouplingBlock::Quadratic(coefficient) => CouplingLaw::Quadratic { a: coefficient.per_hz() },
            CouplingBlock::Sqrt { coefficient, match_at } => {
                CouplingLaw::Quadratic { a: coefficient.per_hz() }.sqrt_matched(match_at.angular())
            }
        };
        let spec = FreqModelSpec {
            omega_grid: f.frequencies.values("frequency_model.frequencies", Frequency::angular)?,
            edge: f.edge.angular(),
            gamma_t_inside: f.gamma_t_inside.rate(),
            gamma_t_outside: f.gamma_t_outside.rate(),
            coupling,
            rho: density_per_hz_to_angular(f.density.per_hz()),
            offset: offset(f.offset_fraction),
            qubit: self.qubit_params()?,
        };
        spec.validate().map_err(|e| ConfigError::new("frequency_model", e))?;
        Ok(spec)
    }
}

fn offset(fraction: Option<f64>) -> OffsetPolicy {
    match fraction {
        None => OffsetPolicy::Midpoint,
        Some(fraction) => OffsetPolicy::Fraction { fraction },
    }
}

fn delay_grid(g: &Grid<TimeKind>, path: &str) -> Result<Vec<f64>> {
    let v = g.values(path, Duration::seconds)?;
    if v.iter().any(|t| !(*t >= 0.0)) {
        return Err(ConfigError::new(path, "delays must be >= 0"));
    }
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ConfigError::new(path, "delays must increase"));
    }
    Ok(v)
}

fn located<E: fmt::Display>(e: serde_path_to_error::Error<E>) -> ConfigError {
    let path = e.path().to_string();
    let path = if path == "." { String::new() } else { path };
    ConfigError::new(path, e.into_inner())
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};

/// Qubit state prepared by an ideal pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeState {
    #[serde(rename = "g")]
    Ground,
    #[serde(rename = "e")]
    Excited,
}

impl ProbeState {
    pub fn population(self) -> f64 {
        match self {
            ProbeState::Ground => 0.0,
            ProbeState::Excited => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ProbeState::Ground => "g",
            ProbeState::Excited => "e",
        }
    }
}

impl std::str::FromStr for ProbeState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "g" | "ground" => Ok(ProbeState::Ground),
            "e" | "excited" => Ok(ProbeState::Excited),
            other => Err(argument(format!("unknown probe state {other:?}, expected g or e"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    /// Qubit angular frequency during the probe (rad/s).
    pub frequency: Option<f64>,
    pub probe_state: Option<ProbeState>,
    pub sequence_id: Option<String>,
    /// Purcell-weighted mean TLS population when the probe started.
    pub tls_population: Option<f64>,
}

/// Sampled qubit (and optionally TLS) populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    /// Sample times in seconds, strictly increasing.
    pub times: Vec<f64>,
    pub p_q: Vec<f64>,
    /// TLS populations, one row per sample.
    pub p_t: Option<Vec<Vec<f64>>>,
    /// Per-sample standard deviation of `p_q`, when known.
    pub population_std: Option<Vec<f64>>,
    pub meta: TraceMeta,
}

impl DecayTrace {
    /// Validates lengths, finiteness and strictly increasing times.
    ///
    /// Population bounds are not enforced here: measured traces carry noise
    /// that can step outside `[0, 1]`. Simulated traces are checked with
    /// [`DecayTrace::check_population_bounds`].
    pub fn new(times: Vec<f64>, p_q: Vec<f64>) -> Result<Self> {
        let trace = Self {
            times,
            p_q,
            p_t: None,
            population_std: None,
            meta: TraceMeta::default(),
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn with_meta(mut self, meta: TraceMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.p_q.len() {
            return Err(argument(format!(
                "trace has {} times but {} populations",
                self.times.len(),
                self.p_q.len()
            )));
        }
        if let Some(std) = &self.population_std {
            if std.len() != self.times.len() {
                return Err(argument("population_std length differs from times"));
            }
            if std.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                return Err(argument("population_std must be finite and >= 0"));
            }
        }
        if let Some(rows) = &self.p_t {
            if rows.len() != self.times.len() {
                return Err(argument("TLS population rows differ from times"));
            }
        }
        // An infinite time is allowed for a readout after an unbounded wait.
        if self.times.iter().any(|t| t.is_nan()) || self.p_q.iter().any(|v| !v.is_finite()) {
            return Err(argument("trace contains non-finite samples"));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(argument("trace times must be strictly increasing"));
        }
        Ok(())
    }

    pub fn check_population_bounds(&self) -> Result<()> {
        let rows = self.p_t.iter().flatten().flatten();
        if self.p_q.iter().chain(rows).any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Numeric("trace population outside [0, 1]".into()));
        }
        Ok(())
    }

    /// Smallest spacing between consecutive samples.
    pub fn resolution(&self) -> Option<f64> {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(|a, b| a.total_cmp(b))
    }
}

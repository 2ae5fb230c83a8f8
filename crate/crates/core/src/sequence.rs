//! Ideal pulse sequences over the Solomon dynamics.
//!
//! Pulses and frequency changes are instantaneous; populations only change
//! during waits. TLS populations persist across every event, so a bath
//! burned by earlier pulses is seen by later probes.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DecayTrace, ProbeState, Propagator, SolomonSystem, TraceMeta};
use crate::error::{argument, domain, Result};
use crate::model::{QubitParams, Tls};

/// Default relaxation wait after each burn pulse.
pub const DEFAULT_TAU_R: f64 = 1e-6;

/// Delay at which the qubit population is read as the TLS plateau.
pub const DEFAULT_PLATEAU_DELAY: f64 = 5e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PulseEvent {
    /// Ideal pulse: `p_q` becomes 1 (excited) or 0 (ground, active reset).
    Prepare(ProbeState),
    /// Moves the qubit to a new angular frequency (rad/s).
    SetQubitFrequency(f64),
    /// Free evolution for a duration in seconds.
    Wait(f64),
    /// Records the qubit population.
    Readout,
}

/// One TLS at an absolute angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathTls {
    pub omega: f64,
    pub g: f64,
    pub gamma_t: f64,
    /// Initial population; `None` means thermal.
    pub p: Option<f64>,
}

/// TLS relaxation rate as a function of TLS frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LifetimeProfile {
    Uniform(f64),
    /// `inside` above `edge` (rad/s), `outside` at or below it.
    BandEdge { edge: f64, inside: f64, outside: f64 },
}

impl LifetimeProfile {
    pub fn gamma_t(&self, omega: f64) -> f64 {
        match *self {
            LifetimeProfile::Uniform(g) => g,
            LifetimeProfile::BandEdge { edge, inside, outside } => {
                if omega > edge {
                    inside
                } else {
                    outside
                }
            }
        }
    }
}

/// A fraction of sites given a separate (usually much slower) decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongLived {
    pub fraction: f64,
    pub gamma_t: f64,
}

/// Equally spaced TLSs around an absolute anchor frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombBath {
    /// Frequency of the central site (rad/s).
    pub anchor: f64,
    pub spacing: f64,
    /// Sites at `anchor + k * spacing` for `|k| <= half_width`.
    pub half_width: usize,
    pub g: f64,
    pub lifetime: LifetimeProfile,
    pub long_lived: Option<LongLived>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub sites: Vec<BathTls>,
    /// Qubit frequencies (rad/s) over which the bath is defined.
    pub range: (f64, f64),
}

impl BathSpec {
    /// An explicit site list, defined for every positive qubit frequency.
    pub fn explicit(sites: Vec<BathTls>) -> Self {
        Self { sites, range: (0.0, f64::INFINITY) }
    }

    /// `n` identical TLSs at the same frequency.
    pub fn resonant(omega: f64, n: usize, g: f64, gamma_t: f64) -> Self {
        Self::explicit(vec![BathTls { omega, g, gamma_t, p: None }; n])
    }

    /// Comb sites; the bath is defined up to half a spacing past the outer
    /// sites.
    pub fn comb(spec: &CombBath) -> Result<Self> {
        if !(spec.spacing > 0.0) {
            return Err(domain("comb spacing must be > 0"));
        }
        let h = spec.half_width as i64;
        let mut sites = Vec::with_capacity(2 * spec.half_width + 1);
        for (i, k) in (-h..=h).enumerate() {
            let omega = spec.anchor + k as f64 * spec.spacing;
            let mut gamma_t = spec.lifetime.gamma_t(omega);
            if let Some(ll) = spec.long_lived {
                if !(0.0..=1.0).contains(&ll.fraction) {
                    return Err(domain("long-lived fraction must lie in [0, 1]"));
                }
                // Deterministic interleave: site i is long-lived whenever the
                // running count of long-lived sites steps up.
                let before = (i as f64 * ll.fraction).floor();
                let after = ((i + 1) as f64 * ll.fraction).floor();
                if after > before {
                    gamma_t = ll.gamma_t;
                }
            }
            sites.push(BathTls { omega, g: spec.g, gamma_t, p: None });
        }
        let reach = (spec.half_width as f64 + 0.5) * spec.spacing;
        Ok(Self { sites, range: (spec.anchor - reach, spec.anchor + reach) })
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.range = (lo, hi);
        self
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn check_frequency(&self, omega: f64) -> Result<()> {
        let (lo, hi) = self.range;
        if !(omega >= lo && omega <= hi) {
            return Err(domain(format!(
                "qubit frequency {omega} rad/s lies outside the bath range [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.sites {
            if !s.omega.is_finite() {
                return Err(domain("TLS frequency must be finite"));
            }
            Tls::new(0.0, s.g, s.gamma_t, s.p.unwrap_or(0.0)).validate()?;
        }
        if !(self.range.0 <= self.range.1) {
            return Err(domain("bath range must be ordered"));
        }
        Ok(())
    }

    fn tls_at(&self, omega_q: f64, populations: &[f64]) -> Vec<Tls> {
        self.sites
            .iter()
            .zip(populations)
            .map(|(s, &p)| Tls::new(s.omega - omega_q, s.g, s.gamma_t, p))
            .collect()
    }
}

/// Readouts and the final populations of one sequence run.
#[derive(Debug, Clone)]
pub struct SequenceOutcome {
    /// One sample per readout, timed on the sequence clock.
    pub trace: DecayTrace,
    /// `(p_q, p_t¹ … p_tᴺ)` after the last event.
    pub state: Vec<f64>,
    pub frequency: f64,
}

/// Executes pulse sequences on one bath, caching a propagator per qubit
/// frequency.
#[derive(Debug)]
pub struct SequenceRunner<'a> {
    bath: &'a BathSpec,
    qubit: QubitParams,
    cache: HashMap<u64, Propagator>,
}

impl<'a> SequenceRunner<'a> {
    pub fn new(bath: &'a BathSpec, qubit: QubitParams) -> Result<Self> {
        bath.validate()?;
        qubit.validate()?;
        Ok(Self { bath, qubit, cache: HashMap::new() })
    }

    /// Thermal qubit and bath; sites with an explicit population keep it.
    pub fn initial_state(&self) -> Vec<f64> {
        let p_th = self.qubit.p_th;
        std::iter::once(p_th)
            .chain(self.bath.sites.iter().map(|s| s.p.unwrap_or(p_th)))
            .collect()
    }

    /// The system seen by a qubit at `omega` with populations `state`.
    pub fn system(&self, omega: f64, state: &[f64]) -> Result<SolomonSystem> {
        self.bath.check_frequency(omega)?;
        let qubit = QubitParams { omega_q: omega, ..self.qubit };
        SolomonSystem::new(qubit, self.bath.tls_at(omega, &state[1..]), state[0])
    }

    fn propagator(&mut self, omega: f64) -> Result<&Propagator> {
        self.bath.check_frequency(omega)?;
        let key = omega.to_bits();
        if !self.cache.contains_key(&key) {
            let sys = self.system(omega, &self.initial_state())?;
            self.cache.insert(key, Propagator::new(&sys));
        }
        Ok(&self.cache[&key])
    }

    /// Evolves `state` at qubit frequency `omega` for `duration`.
    pub fn wait(&mut self, omega: f64, state: &[f64], duration: f64) -> Result<Vec<f64>> {
        if duration == 0.0 {
            return Ok(state.to_vec());
        }
        self.propagator(omega)?.propagate(state, duration)
    }

    /// Qubit populations at `times` after `state`, at frequency `omega`.
    pub fn sample(&mut self, omega: f64, state: &[f64], times: &[f64]) -> Result<Vec<f64>> {
        Ok(self.propagator(omega)?.sample(state, times, false)?.0)
    }

    /// Runs `events` from `state` with the qubit starting at `omega`.
    pub fn run_from(
        &mut self,
        events: &[PulseEvent],
        mut state: Vec<f64>,
        mut omega: f64,
    ) -> Result<SequenceOutcome> {
        self.bath.check_frequency(omega)?;
        let mut clock = 0.0;
        let mut times = Vec::new();
        let mut p_q = Vec::new();
        for event in events {
            match *event {
                PulseEvent::Prepare(s) => state[0] = s.population(),
                PulseEvent::SetQubitFrequency(w) => {
                    self.bath.check_frequency(w)?;
                    omega = w;
                }
                PulseEvent::Wait(tau) => {
                    if !(tau >= 0.0) {
                        return Err(argument(format!("wait must be >= 0, got {tau}")));
                    }
                    state = self.wait(omega, &state, tau)?;
                    clock += tau;
                }
                PulseEvent::Readout => {
                    if times.last().is_some_and(|&t| t >= clock) {
                        return Err(argument("consecutive readouts must be separated by a wait"));
                    }
                    times.push(clock);
                    p_q.push(state[0]);
                }
            }
        }
        let trace = DecayTrace::new(times, p_q)?.with_meta(TraceMeta {
            frequency: Some(omega),
            ..TraceMeta::default()
        });
        Ok(SequenceOutcome { trace, state, frequency: omega })
    }

    /// Runs `events` from the thermal state at the qubit's own frequency.
    pub fn run(&mut self, events: &[PulseEvent]) -> Result<SequenceOutcome> {
        let state = self.initial_state();
        self.run_from(events, state, self.qubit.omega_q)
    }
}

/// Readouts of `events` applied to a thermal bath.
pub fn run_sequence(
    bath: &BathSpec,
    qubit: &QubitParams,
    events: &[PulseEvent],
) -> Result<DecayTrace> {
    Ok(SequenceRunner::new(bath, *qubit)?.run(events)?.trace)
}

/// Hole-burning protocol: `n_pulses` excitations at `omega_0`, each relaxed
/// into the bath at `omega_q` (or cycled through `interleave`), followed by
/// a probe of the thermalization dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleburnSpec {
    pub omega_0: f64,
    pub omega_q: f64,
    pub n_pulses: usize,
    pub tau_r: f64,
    pub probe_state: ProbeState,
    pub tau_d_grid: Vec<f64>,
    /// Park the qubit at `omega_0` during the delay, then thermalize at
    /// `omega_q` for `tau_r` before reading out.
    pub detuned_delay: bool,
    /// Interaction frequencies cycled per burn pulse.
    pub interleave: Option<Vec<f64>>,
    /// Probe delay used as the plateau readout.
    pub plateau_delay: f64,
}

impl HoleburnSpec {
    pub fn new(omega_0: f64, omega_q: f64, n_pulses: usize) -> Self {
        Self {
            omega_0,
            omega_q,
            n_pulses,
            tau_r: DEFAULT_TAU_R,
            probe_state: ProbeState::Ground,
            tau_d_grid: Vec::new(),
            detuned_delay: false,
            interleave: None,
            plateau_delay: DEFAULT_PLATEAU_DELAY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_r > 0.0) {
            return Err(domain("tau_r must be > 0"));
        }
        if !(self.plateau_delay >= 0.0) {
            return Err(domain("plateau delay must be >= 0"));
        }
        if self.tau_d_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(domain("delays must be finite and >= 0"));
        }
        if self.tau_d_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("delay grid must be strictly increasing"));
        }
        if self.interleave.as_ref().is_some_and(|f| f.is_empty()) {
            return Err(domain("interleave list must not be empty"));
        }
        Ok(())
    }

    /// Interaction frequency of burn pulse `i`.
    pub fn burn_frequency(&self, i: usize) -> f64 {
        match &self.interleave {
            Some(list) => list[i % list.len()],
            None => self.omega_q,
        }
    }

    /// The burn phase for pulses `start..end`.
    pub fn burn_events(&self, start: usize, end: usize) -> Vec<PulseEvent> {
        (start..end)
            .flat_map(|i| {
                [
                    PulseEvent::SetQubitFrequency(self.omega_0),
                    PulseEvent::Prepare(ProbeState::Excited),
                    PulseEvent::SetQubitFrequency(self.burn_frequency(i)),
                    PulseEvent::Wait(self.tau_r),
                ]
            })
            .collect()
    }

    /// Probe phase with delay `tau_d`, interacting at `omega`.
    pub fn probe_events(&self, omega: f64, tau_d: f64) -> Vec<PulseEvent> {
        let mut ev = vec![
            PulseEvent::SetQubitFrequency(self.omega_0),
            PulseEvent::Prepare(self.probe_state),
        ];
        if self.detuned_delay {
            ev.extend([
                PulseEvent::Wait(tau_d),
                PulseEvent::SetQubitFrequency(omega),
                PulseEvent::Wait(self.tau_r),
            ]);
        } else {
            ev.extend([PulseEvent::SetQubitFrequency(omega), PulseEvent::Wait(tau_d)]);
        }
        ev.extend([PulseEvent::SetQubitFrequency(self.omega_0), PulseEvent::Readout]);
        ev
    }

    /// Full sequence for one delay.
    pub fn events(&self, tau_d: f64) -> Vec<PulseEvent> {
        let mut ev = self.burn_events(0, self.n_pulses);
        ev.extend(self.probe_events(self.omega_q, tau_d));
        ev
    }
}

fn burn(
    runner: &mut SequenceRunner<'_>,
    spec: &HoleburnSpec,
    state: Vec<f64>,
    start: usize,
    end: usize,
) -> Result<Vec<f64>> {
    Ok(runner
        .run_from(&spec.burn_events(start, end), state, spec.omega_0)?
        .state)
}

/// Qubit readouts of the probe at `omega` for every delay in `spec`.
fn probe_trace(
    runner: &mut SequenceRunner<'_>,
    spec: &HoleburnSpec,
    burned: &[f64],
    omega: f64,
) -> Result<DecayTrace> {
    let tls_population = runner.system(omega, burned)?.tls_weighted_population();
    let mut start = burned.to_vec();
    start[0] = spec.probe_state.population();
    let p_q = if spec.detuned_delay {
        let mut out = Vec::with_capacity(spec.tau_d_grid.len());
        for &tau_d in &spec.tau_d_grid {
            let parked = runner.wait(spec.omega_0, &start, tau_d)?;
            out.push(runner.wait(omega, &parked, spec.tau_r)?[0]);
        }
        out
    } else {
        runner.sample(omega, &start, &spec.tau_d_grid)?
    };
    Ok(DecayTrace::new(spec.tau_d_grid.clone(), p_q)?.with_meta(TraceMeta {
        frequency: Some(omega),
        probe_state: Some(spec.probe_state),
        sequence_id: Some(format!(
            "holeburn-n{}{}",
            spec.n_pulses,
            if spec.detuned_delay { "-detuned" } else { "" }
        )),
        tls_population: Some(tls_population),
    }))
}

/// Plateau readout `p_q(plateau_delay)` as a function of burn pulse count.
pub fn holeburn_saturation_curve(
    spec: &HoleburnSpec,
    bath: &BathSpec,
    qubit: &QubitParams,
    pulse_counts: &[usize],
) -> Result<Vec<(usize, f64)>> {
    spec.validate()?;
    let mut runner = SequenceRunner::new(bath, *qubit)?;
    let mut order: Vec<usize> = (0..pulse_counts.len()).collect();
    order.sort_by_key(|&i| pulse_counts[i]);
    let mut out = vec![(0, 0.0); pulse_counts.len()];
    let mut state = runner.initial_state();
    let mut done = 0;
    for i in order {
        let n = pulse_counts[i];
        state = burn(&mut runner, spec, state, done, n)?;
        done = n;
        let mut probe = state.clone();
        probe[0] = spec.probe_state.population();
        let p = runner.wait(spec.omega_q, &probe, spec.plateau_delay)?[0];
        out[i] = (n, p);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleburnSpectrum {
    /// `(omega, p_eq)` per probe frequency, in input order.
    pub points: Vec<(f64, f64)>,
    /// Frequency of the largest plateau.
    pub peak: f64,
    /// Full width at half maximum of the excess over `p_th`, when both
    /// half-maximum crossings lie inside the probe range.
    pub fwhm: Option<f64>,
}

impl HoleburnSpectrum {
    /// Frequencies of local maxima whose excess exceeds `threshold`, in
    /// increasing frequency order.
    pub fn peaks(&self, p_th: f64, threshold: f64) -> Vec<f64> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        (0..pts.len())
            .filter(|&i| {
                let y = pts[i].1;
                let left = i == 0 || pts[i - 1].1 < y;
                let right = i + 1 == pts.len() || pts[i + 1].1 <= y;
                left && right && y - p_th > threshold
            })
            .map(|i| pts[i].0)
            .collect()
    }
}

/// Plateau population versus probe frequency after one burn.
pub fn holeburn_spectrum(
    spec: &HoleburnSpec,
    probe_frequencies: &[f64],
    bath: &BathSpec,
    qubit: &QubitParams,
) -> Result<HoleburnSpectrum> {
    spec.validate()?;
    if probe_frequencies.is_empty() {
        return Err(argument("probe frequency list is empty"));
    }
    let mut runner = SequenceRunner::new(bath, *qubit)?;
    let state = runner.initial_state();
    let burned = burn(&mut runner, spec, state, 0, spec.n_pulses)?;
    let mut points = Vec::with_capacity(probe_frequencies.len());
    for &omega in probe_frequencies {
        let mut probe = burned.clone();
        probe[0] = spec.probe_state.population();
        let p = runner.wait(omega, &probe, spec.plateau_delay)?[0];
        points.push((omega, p));
    }
    let (peak, fwhm) = peak_width(&points, qubit.p_th);
    Ok(HoleburnSpectrum { points, peak, fwhm })
}

fn peak_width(points: &[(f64, f64)], base: f64) -> (f64, Option<f64>) {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (imax, &(peak, top)) = pts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty");
    let half = base + 0.5 * (top - base);
    if !(top > base) {
        return (peak, None);
    }
    let cross = |i: usize, j: usize| {
        let ((x0, y0), (x1, y1)) = (pts[i], pts[j]);
        x0 + (half - y0) * (x1 - x0) / (y1 - y0)
    };
    let left = (1..=imax).rev().find(|&i| pts[i - 1].1 <= half).map(|i| cross(i - 1, i));
    let right = (imax..pts.len() - 1).find(|&i| pts[i + 1].1 <= half).map(|i| cross(i, i + 1));
    (peak, left.zip(right).map(|(l, r)| r - l))
}

/// One trace over `spec.tau_d_grid` per interaction frequency. Each
/// frequency is burned and probed independently; cells run in parallel and
/// come back in input order.
pub fn relaxation_scan(
    spec: &HoleburnSpec,
    frequencies: &[f64],
    bath: &BathSpec,
    qubit: &QubitParams,
) -> Result<Vec<DecayTrace>> {
    spec.validate()?;
    if frequencies.is_empty() || spec.tau_d_grid.is_empty() {
        return Err(argument("relaxation scan needs frequencies and delays"));
    }
    frequencies
        .par_iter()
        .map(|&omega| {
            let cell = HoleburnSpec { omega_q: omega, ..spec.clone() };
            let mut runner = SequenceRunner::new(bath, *qubit)?;
            let state = runner.initial_state();
            let burned = burn(&mut runner, &cell, state, 0, cell.n_pulses)?;
            probe_trace(&mut runner, &cell, &burned, omega)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ghz, mhz};

    fn qubit() -> QubitParams {
        QubitParams::new(ghz(6.28), 2.0e4)
    }

    fn bath() -> BathSpec {
        BathSpec::resonant(ghz(6.28), 20, 2.0 * std::f64::consts::PI * 60e3, 1.0 / 34e-6)
    }

    #[test]
    fn empty_bath_thermalizes() {
        let events = [PulseEvent::Prepare(ProbeState::Excited), PulseEvent::Wait(f64::INFINITY), PulseEvent::Readout];
        let trace = run_sequence(&BathSpec::explicit(vec![]), &qubit(), &events).unwrap();
        assert!((trace.p_q[0] - qubit().p_th).abs() < 1e-12);
    }

    #[test]
    fn prepare_is_idempotent() {
        let b = bath();
        let mut r = SequenceRunner::new(&b, qubit()).unwrap();
        let once = [PulseEvent::Prepare(ProbeState::Excited), PulseEvent::Wait(1e-6)];
        let twice = [
            PulseEvent::Prepare(ProbeState::Excited),
            PulseEvent::Prepare(ProbeState::Excited),
            PulseEvent::Wait(1e-6),
        ];
        assert_eq!(r.run(&once).unwrap().state, r.run(&twice).unwrap().state);
    }

    #[test]
    fn frequency_changes_without_wait_collapse() {
        let b = bath();
        let mut r = SequenceRunner::new(&b, qubit()).unwrap();
        let direct = [PulseEvent::Prepare(ProbeState::Excited), PulseEvent::SetQubitFrequency(ghz(6.29)), PulseEvent::Wait(2e-6)];
        let hop = [
            PulseEvent::Prepare(ProbeState::Excited),
            PulseEvent::SetQubitFrequency(ghz(6.3)),
            PulseEvent::SetQubitFrequency(ghz(6.29)),
            PulseEvent::Wait(2e-6),
        ];
        assert_eq!(r.run(&direct).unwrap().state, r.run(&hop).unwrap().state);
    }

    #[test]
    fn readout_does_not_disturb_bath() {
        let b = bath();
        let spec = HoleburnSpec::new(ghz(6.3), ghz(6.28), 10);
        let plain = spec.burn_events(0, 10);
        let mut probed = Vec::new();
        for chunk in plain.chunks(4) {
            probed.extend_from_slice(chunk);
            probed.push(PulseEvent::Readout);
        }
        let mut r = SequenceRunner::new(&b, qubit()).unwrap();
        assert_eq!(r.run(&plain).unwrap().state, r.run(&probed).unwrap().state);
    }

    #[test]
    fn frequency_outside_bath_is_rejected() {
        let comb = CombBath {
            anchor: ghz(6.0),
            spacing: mhz(1.0),
            half_width: 5,
            g: 1e5,
            lifetime: LifetimeProfile::Uniform(1e5),
            long_lived: None,
        };
        let b = BathSpec::comb(&comb).unwrap();
        let q = QubitParams::new(ghz(6.0), 1e4);
        let events = [PulseEvent::SetQubitFrequency(ghz(6.1))];
        assert!(run_sequence(&b, &q, &events).is_err());
    }

    #[test]
    fn long_lived_interleave_counts() {
        let comb = CombBath {
            anchor: ghz(6.0),
            spacing: mhz(1.0),
            half_width: 49,
            g: 1e5,
            lifetime: LifetimeProfile::Uniform(1e5),
            long_lived: Some(LongLived { fraction: 0.2, gamma_t: 1e3 }),
        };
        let b = BathSpec::comb(&comb).unwrap();
        let slow = b.sites.iter().filter(|s| s.gamma_t == 1e3).count();
        assert_eq!(slow, 19);
    }

    #[test]
    fn band_edge_profile() {
        let p = LifetimeProfile::BandEdge { edge: 5.0, inside: 1.0, outside: 10.0 };
        assert_eq!(p.gamma_t(6.0), 1.0);
        assert_eq!(p.gamma_t(5.0), 10.0);
    }

    #[test]
    fn scan_matches_run_sequence() {
        let b = bath();
        let mut spec = HoleburnSpec::new(ghz(6.3), ghz(6.28), 5);
        spec.tau_d_grid = vec![0.5e-6, 2e-6, 10e-6];
        let traces = relaxation_scan(&spec, &[ghz(6.28)], &b, &qubit()).unwrap();
        for (i, &tau) in spec.tau_d_grid.iter().enumerate() {
            let direct = run_sequence(&b, &qubit(), &spec.events(tau)).unwrap();
            assert!((traces[0].p_q[i] - direct.p_q[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn detuned_scan_matches_run_sequence() {
        let b = bath();
        let mut spec = HoleburnSpec::new(ghz(6.3), ghz(6.28), 5);
        spec.tau_d_grid = vec![1e-6, 20e-6];
        spec.detuned_delay = true;
        let traces = relaxation_scan(&spec, &[ghz(6.28)], &b, &qubit()).unwrap();
        for (i, &tau) in spec.tau_d_grid.iter().enumerate() {
            let direct = run_sequence(&b, &qubit(), &spec.events(tau)).unwrap();
            assert!((traces[0].p_q[i] - direct.p_q[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn saturation_starts_thermal_and_rises() {
        let spec = HoleburnSpec::new(ghz(6.3), ghz(6.28), 0);
        let curve = holeburn_saturation_curve(&spec, &bath(), &qubit(), &[40, 0, 10]).unwrap();
        assert_eq!(curve[1].0, 0);
        // The ground-state probe borrows from the 20 resonant sites, pulling
        // the plateau at most p_th/21 below p_th.
        let p_th = qubit().p_th;
        assert!(curve[1].1 <= p_th && curve[1].1 > p_th * (1.0 - 1.0 / 21.0) - 1e-9);
        assert!(curve[2].1 < curve[0].1);
    }

    #[test]
    fn half_width_by_interpolation() {
        let pts = [(0.0, 0.0), (1.0, 0.5), (2.0, 1.0), (3.0, 0.5), (4.0, 0.0)];
        let (peak, w) = peak_width(&pts, 0.0);
        assert_eq!(peak, 2.0);
        assert!((w.unwrap() - 2.0).abs() < 1e-12);
    }
}

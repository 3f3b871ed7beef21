//! Discrete-time leaky integrate-and-fire network that searches for low
//! energy states of a QUBO instance.
//!
//! Each bit of the QUBO is a neuron; synaptic weights are the negated QUBO
//! matrix, with the diagonal acting as self-synapses. A step has two phases:
//!
//! 1. every neuron adds the weights of the spikes emitted in the previous
//!    step to its synaptic current (the current persists between steps);
//! 2. the membrane potential follows the forward-Euler LIF update
//!    `u <- u + dt/tau (-u + R I)`, and neurons at or above threshold emit a
//!    spike and reset.
//!
//! Because spikes only act one step later, the neuron updates inside a step
//! are independent of evaluation order.
//!
//! The decoded bit of a neuron is 1 when it fired in more than half of the
//! steps of the decode window.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{objective, QuboInstance};
use crate::seed::rng_from_seed;

/// Where the stochastic current term is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// One `N(0, sigma_v^2)` term per spike delivered to the neuron.
    #[default]
    PerSpike,
    /// One draw per neuron per step.
    PerNeuron,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifParams {
    /// Euler time step.
    pub dt: f64,
    /// Membrane time constant.
    pub tau: f64,
    /// Membrane resistance.
    pub resistance: f64,
    /// Firing threshold.
    pub u_th: f64,
    /// Reset potential, also the initial potential.
    pub u_rst: f64,
    /// Number of simulated steps.
    pub steps: usize,
    /// Initial synaptic current of every neuron.
    pub i0: f64,
    /// Variance of the stochastic current term (0 disables it).
    pub sigma_v_sq: f64,
    /// Fraction of the final steps used for rate decoding.
    pub decode_window: f64,
    /// Per-step multiplicative factor on the synaptic current; 1 keeps the
    /// current fully persistent.
    pub current_decay: f64,
    pub noise_mode: NoiseMode,
    /// Scale weights by `1 / max |Q_ij|` so one parameter set works for all
    /// channel sizes and SNRs. Positive scaling leaves the argmin unchanged.
    pub normalize_weights: bool,
}

impl Default for LifParams {
    fn default() -> Self {
        let u_th = 1.0;
        let resistance = 1.0;
        Self {
            dt: 1.0,
            tau: 3.0,
            resistance,
            u_th,
            u_rst: 0.0,
            steps: 200,
            i0: 2.0 * u_th / resistance,
            sigma_v_sq: 0.0,
            decode_window: 1.0,
            current_decay: 1.0,
            noise_mode: NoiseMode::PerSpike,
            normalize_weights: true,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.dt,
            self.tau,
            self.resistance,
            self.u_th,
            self.u_rst,
            self.i0,
            self.sigma_v_sq,
            self.decode_window,
            self.current_decay,
        ]
        .iter()
        .all(|v| v.is_finite());
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !finite {
            return bad("LIF parameters must be finite");
        }
        if !(self.dt > 0.0 && self.dt < self.tau) {
            return bad("LIF parameters need 0 < dt < tau");
        }
        if self.u_th <= self.u_rst {
            return bad("LIF threshold must exceed the reset potential");
        }
        if self.steps == 0 {
            return bad("LIF simulation needs at least one step");
        }
        if !(self.decode_window > 0.0 && self.decode_window <= 1.0) {
            return bad("decode window must lie in (0, 1]");
        }
        if self.sigma_v_sq < 0.0 {
            return bad("noise variance must be non-negative");
        }
        if !(self.current_decay > 0.0 && self.current_decay <= 1.0) {
            return bad("current decay must lie in (0, 1]");
        }
        Ok(())
    }

    /// Number of trailing steps in the decode window.
    pub fn window_len(&self) -> usize {
        ((self.decode_window * self.steps as f64).ceil() as usize).clamp(1, self.steps)
    }
}

/// Network derived from a QUBO instance: `W = -Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikingNetwork {
    weights: DMatrix<f64>,
    weight_scale: f64,
}

impl SpikingNetwork {
    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    /// Synaptic matrix; entry `(i, j)` is the weight from neuron `j` to `i`.
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// `1 / max |W_ij|` (1 for an all-zero matrix).
    pub fn weight_scale(&self) -> f64 {
        self.weight_scale
    }

    fn gain(&self, params: &LifParams) -> f64 {
        if params.normalize_weights {
            self.weight_scale
        } else {
            1.0
        }
    }
}

pub fn init_network(inst: &QuboInstance) -> SpikingNetwork {
    let weights = -inst.matrix();
    let max = inst.max_abs();
    let weight_scale = if max > 0.0 { 1.0 / max } else { 1.0 };
    SpikingNetwork {
        weights,
        weight_scale,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    /// Membrane potentials.
    pub u: Vec<f64>,
    /// Synaptic currents.
    pub i_syn: Vec<f64>,
    /// Spikes emitted in the previous step, delivered in the next one.
    pub last_spikes: Vec<u8>,
}

impl NetworkState {
    /// `u = u_rst`, `I = i0`, nothing in flight.
    pub fn initial(n: usize, params: &LifParams) -> Self {
        Self {
            u: vec![params.u_rst; n],
            i_syn: vec![params.i0; n],
            last_spikes: vec![0; n],
        }
    }
}

fn advance(
    net: &SpikingNetwork,
    state: &mut NetworkState,
    params: &LifParams,
    rng: &mut Option<&mut dyn RngCore>,
    mut pre_reset: Option<&mut Vec<f64>>,
) {
    let n = net.n();
    assert_eq!(state.u.len(), n, "state size does not match the network");
    assert_eq!(state.i_syn.len(), n, "state size does not match the network");
    assert_eq!(state.last_spikes.len(), n, "state size does not match the network");

    let gain = net.gain(params);
    let sigma = params.sigma_v_sq.sqrt();
    if params.current_decay != 1.0 {
        state.i_syn.iter_mut().for_each(|c| *c *= params.current_decay);
    }

    // phase 1: deliver last step's spikes
    let mut delivered = 0usize;
    for j in 0..n {
        if state.last_spikes[j] == 0 {
            continue;
        }
        delivered += 1;
        for (c, w) in state.i_syn.iter_mut().zip(net.weights.column(j).iter()) {
            *c += gain * w;
        }
    }
    // k independent N(0, s^2) terms sum to one N(0, k s^2) draw
    let spread = match params.noise_mode {
        NoiseMode::PerSpike => sigma * (delivered as f64).sqrt(),
        NoiseMode::PerNeuron => sigma,
    };
    if spread > 0.0 {
        if let Some(r) = rng.as_mut() {
            for c in state.i_syn.iter_mut() {
                let v: f64 = r.sample(StandardNormal);
                *c += spread * v;
            }
        }
    }

    // phase 2: membrane update, threshold and reset
    let leak = params.dt / params.tau;
    if let Some(p) = pre_reset.as_mut() {
        p.clear();
    }
    for i in 0..n {
        let u = state.u[i] + leak * (-state.u[i] + params.resistance * state.i_syn[i]);
        assert!(
            u.is_finite() && state.i_syn[i].is_finite(),
            "non-finite neuron state at neuron {i}"
        );
        if let Some(p) = pre_reset.as_mut() {
            p.push(u);
        }
        if u >= params.u_th {
            state.u[i] = params.u_rst;
            state.last_spikes[i] = 1;
        } else {
            state.u[i] = u;
            state.last_spikes[i] = 0;
        }
    }
}

/// Advance one step and return the spikes it emitted.
pub fn step<'s>(
    net: &SpikingNetwork,
    state: &'s mut NetworkState,
    params: &LifParams,
    rng: Option<&mut dyn RngCore>,
) -> &'s [u8] {
    let mut rng = rng;
    advance(net, state, params, &mut rng, None);
    &state.last_spikes
}

/// Like [`step`], also returning the membrane potentials after the Euler
/// update and before any reset.
pub fn step_traced(
    net: &SpikingNetwork,
    state: &mut NetworkState,
    params: &LifParams,
    rng: Option<&mut dyn RngCore>,
) -> Vec<f64> {
    let mut pre = Vec::with_capacity(net.n());
    let mut rng = rng;
    advance(net, state, params, &mut rng, Some(&mut pre));
    pre
}

/// `T x N` binary spike record; row `t` holds the spikes emitted at step `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeRaster {
    n: usize,
    data: Vec<u8>,
}

impl SpikeRaster {
    pub fn new(n: usize) -> Self {
        Self { n, data: Vec::new() }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        let mut r = Self::new(n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "raster row length",
                    expected: n,
                    actual: row.len(),
                });
            }
            r.push(row);
        }
        Ok(r)
    }

    fn push(&mut self, spikes: &[u8]) {
        debug_assert_eq!(spikes.len(), self.n);
        self.data.extend_from_slice(spikes);
    }

    pub fn neurons(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.data.len().checked_div(self.n).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.steps() == 0
    }

    pub fn row(&self, t: usize) -> &[u8] {
        &self.data[t * self.n..(t + 1) * self.n]
    }

    /// Spike counts per neuron over rows `from..`.
    pub fn counts_from(&self, from: usize) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for t in from..self.steps() {
            for (c, &s) in counts.iter_mut().zip(self.row(t)) {
                *c += usize::from(s);
            }
        }
        counts
    }

    /// One line per step, one `0`/`1` character per neuron.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in 0..self.steps() {
            let line: String = self.row(t).iter().map(|&s| if s != 0 { '1' } else { '0' }).collect();
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Simulate `params.steps` steps from the initial state.
pub fn run(
    net: &SpikingNetwork,
    params: &LifParams,
    mut rng: Option<&mut dyn RngCore>,
) -> Result<SpikeRaster> {
    params.validate()?;
    let mut state = NetworkState::initial(net.n(), params);
    let mut raster = SpikeRaster::new(net.n());
    for _ in 0..params.steps {
        advance(net, &mut state, params, &mut rng, None);
        raster.push(&state.last_spikes);
    }
    Ok(raster)
}

/// Full trace of a run: raster plus pre-reset potentials and currents per step.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub raster: SpikeRaster,
    pub potentials: Vec<Vec<f64>>,
    pub currents: Vec<Vec<f64>>,
}

pub fn run_traced(
    net: &SpikingNetwork,
    params: &LifParams,
    mut rng: Option<&mut dyn RngCore>,
) -> Result<RunTrace> {
    params.validate()?;
    let mut state = NetworkState::initial(net.n(), params);
    let mut trace = RunTrace {
        raster: SpikeRaster::new(net.n()),
        potentials: Vec::with_capacity(params.steps),
        currents: Vec::with_capacity(params.steps),
    };
    for _ in 0..params.steps {
        let mut pre = Vec::with_capacity(net.n());
        advance(net, &mut state, params, &mut rng, Some(&mut pre));
        trace.raster.push(&state.last_spikes);
        trace.potentials.push(pre);
        trace.currents.push(state.i_syn.clone());
    }
    Ok(trace)
}

/// Rate decoding over the last `window_len` rows: bit 1 iff the neuron fired
/// in strictly more than half of them.
pub fn decode(raster: &SpikeRaster, params: &LifParams) -> Result<Vec<u8>> {
    if raster.is_empty() {
        return Err(Error::EmptyRaster);
    }
    let steps = raster.steps();
    let window = ((params.decode_window * steps as f64).ceil() as usize).clamp(1, steps);
    Ok(decode_counts(&raster.counts_from(steps - window), window))
}

fn decode_counts(counts: &[usize], window: usize) -> Vec<u8> {
    counts.iter().map(|&c| u8::from(2 * c > window)).collect()
}

/// Simulate and decode without keeping the raster.
fn run_and_decode(
    net: &SpikingNetwork,
    params: &LifParams,
    mut rng: Option<&mut dyn RngCore>,
) -> Vec<u8> {
    let n = net.n();
    let window = params.window_len();
    let start = params.steps - window;
    let mut state = NetworkState::initial(n, params);
    let mut counts = vec![0usize; n];
    for t in 0..params.steps {
        advance(net, &mut state, params, &mut rng, None);
        if t >= start {
            for (c, &s) in counts.iter_mut().zip(&state.last_spikes) {
                *c += usize::from(s);
            }
        }
    }
    decode_counts(&counts, window)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttemptOutcome {
    pub bits: Vec<u8>,
    /// `b' Q b` of the decoded bits.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bits: Vec<u8>,
    pub value: f64,
    /// Zero-based index of the winning attempt.
    pub attempt: usize,
}

/// Seed of attempt `a` for base seed `seed`.
pub fn attempt_seed(seed: u64, attempt: usize) -> u64 {
    seed ^ attempt as u64
}

/// Run `attempts` independent simulations and score each decoded vector.
pub fn run_attempts(
    inst: &QuboInstance,
    params: &LifParams,
    attempts: usize,
    seed: u64,
) -> Result<Vec<AttemptOutcome>> {
    if attempts == 0 {
        return Err(Error::InvalidParameter("at least one attempt is required".into()));
    }
    params.validate()?;
    let net = init_network(inst);
    (0..attempts)
        .map(|a| {
            let mut rng = rng_from_seed(attempt_seed(seed, a));
            let bits = run_and_decode(&net, params, Some(&mut rng));
            let value = objective(inst, &bits)?;
            Ok(AttemptOutcome { bits, value })
        })
        .collect()
}

/// Lowest-objective outcome; ties keep the earliest attempt.
pub fn best_attempt(outcomes: &[AttemptOutcome]) -> Option<Detection> {
    let mut best: Option<(usize, &AttemptOutcome)> = None;
    for (a, o) in outcomes.iter().enumerate() {
        if best.is_none_or(|(_, b)| o.value < b.value) {
            best = Some((a, o));
        }
    }
    best.map(|(attempt, o)| Detection {
        bits: o.bits.clone(),
        value: o.value,
        attempt,
    })
}

/// Multi-attempt detection: keep the decoded vector with the lowest QUBO
/// objective over `attempts` stochastic runs.
pub fn detect(
    inst: &QuboInstance,
    params: &LifParams,
    attempts: usize,
    seed: u64,
) -> Result<Detection> {
    let outcomes = run_attempts(inst, params, attempts, seed)?;
    Ok(best_attempt(&outcomes).expect("attempts >= 1"))
}

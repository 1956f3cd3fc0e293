//! Event-driven Monte Carlo simulation of the network.
//!
//! Sensors are tracked as offsets `y_j = x_j - x_1` from the server, which
//! follows its deterministic line `x_1(0) + r t`. Each sensor's Brownian
//! increment is drawn only when the sensor sends or is observed; a receiver
//! overwrites its reading, so its pending increment is never needed.
//!
//! Random streams: replica `i` uses `ChaCha8Rng::seed_from_u64(master_seed)`
//! with stream id `i`. Epoch-only sampling (the Rao-Blackwell estimator) uses
//! stream id `i | EPOCH_STREAM_BIT`. Within a replica the draw order is: initial
//! offsets, then per event its waiting time, the pair, and the sender's
//! increment; observation increments are drawn in sensor order when an
//! observation time is reached.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{moments_of_config, moments_of_readings, ClockConfig, ModelParams, MomentVector};
use crate::stats::mean_and_se;

/// Set on the stream id of epoch-only replicas.
pub const EPOCH_STREAM_BIT: u64 = 1 << 63;

/// The per-replica random stream.
pub fn replica_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Law of the waiting time between consecutive messages of the merged flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterEventLaw {
    /// Poisson flow. A zero rate means no messages at all.
    Exponential { rate: f64 },
    Deterministic { period: f64 },
    Uniform { low: f64, high: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl InterEventLaw {
    /// The Markovian flow with rate `alpha + N beta`.
    pub fn markovian(params: &ModelParams) -> Self {
        Self::Exponential {
            rate: params.total_rate(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Exponential { rate } => rate.is_finite() && rate >= 0.0,
            Self::Deterministic { period } => period.is_finite() && period > 0.0,
            Self::Uniform { low, high } => low.is_finite() && high.is_finite() && low >= 0.0 && high > low,
            Self::Gamma { shape, scale } => shape.is_finite() && scale.is_finite() && shape > 0.0 && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("bad inter-event law {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Deterministic { period } => period,
            Self::Uniform { low, high } => 0.5 * (low + high),
            Self::Gamma { shape, scale } => shape * scale,
        }
    }

    /// Whether the flow never produces an event.
    pub fn is_silent(&self) -> bool {
        matches!(*self, Self::Exponential { rate } if rate == 0.0)
    }

    /// One waiting time. Assumes a validated law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { rate: 0.0 } => f64::INFINITY,
            Self::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
            Self::Deterministic { period } => period,
            Self::Uniform { low, high } => Uniform::new(low, high).expect("validated").sample(rng),
            Self::Gamma { shape, scale } => Gamma::new(shape, scale).expect("validated").sample(rng),
        }
    }
}

/// Initial readings of the sensors relative to the server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zeros,
    /// Full configuration, server first.
    Deterministic { clocks: Vec<f64> },
    /// I.i.d. Gaussian sensor offsets from the server.
    Gaussian { mean: f64, var: f64 },
}

impl InitialCondition {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::Zeros => Ok(()),
            Self::Deterministic { clocks } => {
                if clocks.len() != n + 1 {
                    return Err(invalid(format!("initial clocks need N + 1 = {} entries", n + 1)));
                }
                ClockConfig::new(clocks.clone()).map(|_| ())
            }
            Self::Gaussian { mean, var } => {
                if mean.is_finite() && var.is_finite() && *var >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid("gaussian initial condition needs finite mean and var >= 0"))
                }
            }
        }
    }

    /// `(R_0, D_0, d_0)` averaged over the initial law.
    pub fn expected_moments(&self, n: usize) -> Result<MomentVector> {
        self.validate(n)?;
        Ok(match self {
            Self::Zeros => MomentVector::ZERO,
            Self::Deterministic { clocks } => moments_of_config(&ClockConfig::new(clocks.clone())?),
            Self::Gaussian { mean, var } => {
                let pairwise = if n > 1 { 2.0 * var } else { 0.0 };
                MomentVector::new(var + mean * mean, pairwise, *mean)
            }
        })
    }

    fn server_start(&self) -> f64 {
        match self {
            Self::Deterministic { clocks } => clocks[0],
            _ => 0.0,
        }
    }

    fn sample_offsets<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            Self::Zeros => vec![0.0; n],
            Self::Deterministic { clocks } => clocks[1..].iter().map(|x| x - clocks[0]).collect(),
            Self::Gaussian { mean, var } => {
                let sd = var.sqrt();
                (0..n)
                    .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
        }
    }
}

/// One simulation experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub params: ModelParams,
    pub law: InterEventLaw,
    pub t_end: f64,
    pub obs_grid: Vec<f64>,
    pub replicas: usize,
    pub master_seed: u64,
    pub initial: InitialCondition,
}

impl SimConfig {
    /// Markovian flow, zero initial offsets, one replica, seed 0, horizon at
    /// the last observation time.
    pub fn new(params: ModelParams, obs_grid: Vec<f64>) -> Self {
        let t_end = obs_grid.last().copied().unwrap_or(0.0);
        Self {
            law: InterEventLaw::markovian(&params),
            params,
            t_end,
            obs_grid,
            replicas: 1,
            master_seed: 0,
            initial: InitialCondition::Zeros,
        }
    }

    pub fn with_replicas(mut self, replicas: usize) -> Self {
        self.replicas = replicas;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_law(mut self, law: InterEventLaw) -> Self {
        self.law = law;
        self
    }

    pub fn with_initial(mut self, initial: InitialCondition) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.law.validate()?;
        self.initial.validate(self.params.n)?;
        if self.replicas == 0 {
            return Err(invalid("replicas must be at least 1"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(invalid("t_end must be finite and non-negative"));
        }
        if self.obs_grid.is_empty() {
            return Err(invalid("observation grid is empty"));
        }
        if self.obs_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("observation grid must be strictly increasing"));
        }
        if self.obs_grid[0] < 0.0 || *self.obs_grid.last().unwrap() > self.t_end {
            return Err(invalid("observation grid must lie in [0, t_end]"));
        }
        if !self.law.is_silent() && self.params.total_rate() == 0.0 {
            return Err(Error::DegenerateRates);
        }
        Ok(())
    }
}

/// Eagerly advances every clock by `delta_t` of free dynamics.
pub fn free_step<R: Rng + ?Sized>(
    config: &ClockConfig,
    delta_t: f64,
    params: &ModelParams,
    rng: &mut R,
) -> Result<ClockConfig> {
    if !(delta_t >= 0.0) {
        return Err(invalid("delta_t must be non-negative"));
    }
    let mut x = config.as_slice().to_vec();
    if delta_t == 0.0 {
        return ClockConfig::new(x);
    }
    x[0] += params.r * delta_t;
    let sd = params.sigma * delta_t.sqrt();
    for xj in &mut x[1..] {
        *xj += params.v * delta_t + sd * rng.sample::<f64, _>(StandardNormal);
    }
    ClockConfig::new(x)
}

/// Sensor offsets with lazily drawn Brownian increments.
struct LazyOffsets {
    y: Vec<f64>,
    last: Vec<f64>,
    skew: f64,
    sigma: f64,
}

impl LazyOffsets {
    fn advance<R: Rng + ?Sized>(&mut self, j: usize, t: f64, rng: &mut R) {
        let dt = t - self.last[j];
        if dt > 0.0 {
            self.y[j] += self.skew * dt;
            if self.sigma > 0.0 {
                self.y[j] += self.sigma * dt.sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
        }
        self.last[j] = t;
    }

    fn advance_all<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) {
        for j in 0..self.y.len() {
            self.advance(j, t, rng);
        }
    }

    fn adopt(&mut self, receiver: usize, value: f64, t: f64) {
        self.y[receiver] = value;
        self.last[receiver] = t;
    }
}

/// Draws the (sender, receiver) pair of one message as 0-based sensor indices;
/// `None` as sender means the server.
pub(crate) fn sample_pair<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> (Option<usize>, usize) {
    let n = params.n;
    let u: f64 = rng.random::<f64>() * params.total_rate();
    if u < params.alpha {
        (None, rng.random_range(0..n))
    } else {
        let s = rng.random_range(0..n);
        let mut r = rng.random_range(0..n - 1);
        if r >= s {
            r += 1;
        }
        (Some(s), r)
    }
}

/// Output of a single replica.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaTrace {
    /// Moments at each observation time.
    pub moments: Vec<MomentVector>,
    /// Number of messages in `(0, t_end]`.
    pub events: usize,
    /// Absolute readings at the last observation time.
    pub final_config: ClockConfig,
}

pub fn run_replica(cfg: &SimConfig, replica_index: u64) -> Result<Vec<MomentVector>> {
    cfg.validate()?;
    Ok(simulate(cfg, replica_index).moments)
}

/// Like [`run_replica`] but also reports the event count and final state.
pub fn run_replica_trace(cfg: &SimConfig, replica_index: u64) -> Result<ReplicaTrace> {
    cfg.validate()?;
    Ok(simulate(cfg, replica_index))
}

fn simulate(cfg: &SimConfig, replica_index: u64) -> ReplicaTrace {
    let p = &cfg.params;
    let mut rng = replica_rng(cfg.master_seed, replica_index);
    let mut state = LazyOffsets {
        y: cfg.initial.sample_offsets(p.n, &mut rng),
        last: vec![0.0; p.n],
        skew: p.skew(),
        sigma: p.sigma,
    };
    let mut moments = Vec::with_capacity(cfg.obs_grid.len());
    let mut events = 0;
    let mut next = cfg.law.sample(&mut rng);
    for &t_obs in &cfg.obs_grid {
        while next <= t_obs {
            match sample_pair(p, &mut rng) {
                (None, r) => state.adopt(r, 0.0, next),
                (Some(s), r) => {
                    state.advance(s, next, &mut rng);
                    let value = state.y[s];
                    state.adopt(r, value, next);
                }
            }
            events += 1;
            next += cfg.law.sample(&mut rng);
        }
        state.advance_all(t_obs, &mut rng);
        moments.push(moments_of_readings(0.0, &state.y));
    }
    while next <= cfg.t_end {
        events += 1;
        next += cfg.law.sample(&mut rng);
    }

    let t_last = *cfg.obs_grid.last().expect("validated");
    let server = cfg.initial.server_start() + p.r * t_last;
    let mut x = Vec::with_capacity(p.n + 1);
    x.push(server);
    x.extend(state.y.iter().map(|y| server + y));
    ReplicaTrace {
        moments,
        events,
        final_config: ClockConfig::new(x).expect("finite readings"),
    }
}

/// Mean and standard error of one moment at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// `None` with a single replica.
    pub se: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleRow {
    pub t: f64,
    pub offset_sq: Estimate,
    pub pairwise_sq: Estimate,
    pub displacement: Estimate,
}

impl EnsembleRow {
    pub fn estimates(&self) -> [Estimate; 3] {
        [self.offset_sq, self.pairwise_sq, self.displacement]
    }

    pub fn mean(&self) -> MomentVector {
        MomentVector::new(self.offset_sq.mean, self.pairwise_sq.mean, self.displacement.mean)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub rows: Vec<EnsembleRow>,
    pub replicas: usize,
}

/// Per-time means and standard errors of replica trajectories, reduced in
/// replica order.
pub fn summarize(obs_grid: &[f64], trajectories: &[Vec<MomentVector>]) -> EnsembleStats {
    let mut column = Vec::with_capacity(trajectories.len());
    let rows = obs_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut est = [Estimate { mean: 0.0, se: None }; 3];
            for (k, e) in est.iter_mut().enumerate() {
                column.clear();
                column.extend(trajectories.iter().map(|tr| tr[i].to_array()[k]));
                let (mean, se) = mean_and_se(&column);
                *e = Estimate { mean, se };
            }
            EnsembleRow {
                t,
                offset_sq: est[0],
                pairwise_sq: est[1],
                displacement: est[2],
            }
        })
        .collect();
    EnsembleStats {
        rows,
        replicas: trajectories.len(),
    }
}

/// Runs all replicas (in parallel on the current rayon pool) and summarizes.
pub fn run_ensemble(cfg: &SimConfig) -> Result<EnsembleStats> {
    cfg.validate()?;
    let trajectories: Vec<Vec<MomentVector>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|i| simulate(cfg, i).moments)
        .collect();
    Ok(summarize(&cfg.obs_grid, &trajectories))
}

//! Moments conditioned on the message epochs.
//!
//! Given the epochs `tau_1 < ... < tau_n` of the merged message flow, the
//! conditional expectations of `(R, D)` and `d` follow an affine recursion:
//! a free step over each gap and a jump step at each epoch. Averaging that
//! recursion over sampled epochs (rather than over full clock trajectories)
//! gives a lower-variance estimator of the same expectations.

use nalgebra::{Matrix2, SMatrix, Vector2};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::model::{DerivedScalars, MomentVector};
use crate::simulator::{replica_rng, summarize, EnsembleStats, SimConfig, EPOCH_STREAM_BIT};
use crate::stats::CompensatedSum;

/// Largest event count handled by [`conditional_given_count`].
pub const MAX_EVENTS: u64 = 1_000_000;

/// Conditional expectations `V = (R, D)` and `d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalState {
    pub v: Vector2<f64>,
    pub d: f64,
}

impl ConditionalState {
    pub const ZERO: Self = Self {
        v: Vector2::new(0.0, 0.0),
        d: 0.0,
    };

    pub fn new(v: Vector2<f64>, d: f64) -> Self {
        Self { v, d }
    }

    pub fn to_moments(&self, n: usize) -> MomentVector {
        let pairwise = if n > 1 { self.v[1] } else { 0.0 };
        MomentVector::new(self.v[0], pairwise, self.d)
    }
}

impl From<MomentVector> for ConditionalState {
    fn from(m: MomentVector) -> Self {
        Self::new(m.quadratic(), m.displacement)
    }
}

/// Message epochs inside `(0, horizon)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochSequence {
    taus: Vec<f64>,
    horizon: f64,
}

impl EpochSequence {
    pub fn new(taus: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid("horizon must be positive"));
        }
        if taus.first().is_some_and(|&t| !(t > 0.0)) {
            return Err(invalid("epochs must be positive"));
        }
        if taus.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("epochs must be strictly increasing"));
        }
        if taus.last().is_some_and(|&t| !(t < horizon)) {
            return Err(invalid("epochs must precede the horizon"));
        }
        Ok(Self { taus, horizon })
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

/// Free dynamics over `delta_t`: `d -> d + b dt`,
/// `V -> V + dt^2 q2 + dt q1 + dt d q0`.
pub fn free_moment_step(state: ConditionalState, delta_t: f64, s: &DerivedScalars) -> ConditionalState {
    let dt = delta_t;
    ConditionalState {
        v: state.v + dt * dt * s.q2 + dt * s.q1 + dt * state.d * s.q0,
        d: state.d + s.skew * dt,
    }
}

/// One message: `V -> K V`, `d -> k_N d`.
pub fn jump_moment_step(state: ConditionalState, s: &DerivedScalars) -> Result<ConditionalState> {
    Ok(ConditionalState {
        v: s.k_matrix()? * state.v,
        d: s.k_n()? * state.d,
    })
}

/// Runs the recursion through all epochs and a final free step to the horizon.
pub fn conditional_moments(init: ConditionalState, epochs: &EpochSequence, s: &DerivedScalars) -> Result<ConditionalState> {
    let mut state = init;
    let mut t = 0.0;
    if !epochs.taus.is_empty() {
        let (k, kn) = (s.k_matrix()?, s.k_n()?);
        for &tau in &epochs.taus {
            let moved = free_moment_step(state, tau - t, s);
            state = ConditionalState::new(k * moved.v, kn * moved.d);
            t = tau;
        }
    }
    Ok(free_moment_step(state, epochs.horizon - t, s))
}

type Block8 = SMatrix<f64, 8, 8>;

/// `M^p` by binary powering.
fn power(m: &Block8, mut p: u64) -> Block8 {
    let mut acc = Block8::identity();
    let mut base = *m;
    while p > 0 {
        if p & 1 == 1 {
            acc *= base;
        }
        p >>= 1;
        if p > 0 {
            base = base * base;
        }
    }
    acc
}

fn block(m: &Block8, row: usize, col: usize) -> Matrix2<f64> {
    m.fixed_view::<2, 2>(2 * row, 2 * col).into_owned()
}

/// Block lower-bidiagonal generator whose powers carry the geometric sums:
/// with `Z` below, block (1,0) of `Z^(n+1)` is `sum_{j+l=n} k^j K^l`,
/// block (2,0) is `sum_{j+l<=n-1} k^j K^l` and block (3,0) is
/// `sum_{l<=n} K^l`.
fn sum_generator(k: &Matrix2<f64>, kn: f64) -> Block8 {
    let id = Matrix2::identity();
    let mut z = Block8::zeros();
    let mut put = |r: usize, c: usize, m: Matrix2<f64>| z.fixed_view_mut::<2, 2>(2 * r, 2 * c).copy_from(&m);
    put(0, 0, *k);
    put(1, 0, id);
    put(1, 1, kn * id);
    put(2, 1, id);
    put(2, 2, id);
    put(3, 0, id);
    put(3, 3, id);
    z
}

/// The matrix sums of the count-conditioned formula for one `n`.
struct CountSums {
    /// `K^n`.
    k_pow: Matrix2<f64>,
    /// `sum_{m<=n} K^m`.
    plain: Matrix2<f64>,
    /// `sum_{m<=n} K^m k^(n-m)`.
    mixed: Matrix2<f64>,
    /// `sum_{n1+n2<=n} K^n2 k^n1`.
    double: Matrix2<f64>,
}

impl CountSums {
    fn from_powers(zn: &Block8, zn1: &Block8) -> Self {
        let mixed = block(zn1, 1, 0);
        Self {
            k_pow: block(zn, 0, 0),
            plain: block(zn1, 3, 0),
            mixed,
            double: block(zn1, 2, 0) + mixed,
        }
    }
}

/// `sum_{m<=n} k^m`.
fn scalar_geometric(kn: f64, n: u64) -> f64 {
    if kn == 1.0 {
        (n + 1) as f64
    } else {
        (1.0 - kn.powf((n + 1) as f64)) / (1.0 - kn)
    }
}

fn count_conditioned(
    init: ConditionalState,
    n: u64,
    t: f64,
    s: &DerivedScalars,
    sums: &CountSums,
) -> ConditionalState {
    let kn = s.k_n.expect("checked by caller");
    let n1 = (n + 1) as f64;
    let n2 = (n + 2) as f64;
    let v = sums.k_pow * init.v
        + t / n1 * sums.plain * s.q1
        + t / n1 * init.d * sums.mixed * s.q0
        + t * t / (n1 * n2) * s.skew * sums.double * s.q0;
    let d = kn.powf(n as f64) * init.d + s.skew * t / n1 * scalar_geometric(kn, n);
    ConditionalState::new(v, d)
}

fn check_count_args(n: u64, t: f64, s: &DerivedScalars) -> Result<()> {
    if n > MAX_EVENTS {
        return Err(invalid(format!("event count above {MAX_EVENTS}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    s.k_matrix().map(|_| ())
}

/// `E(V(x(t)), d(x(t)) | Pi_t = n)` for the Poisson flow.
pub fn conditional_given_count(init: ConditionalState, n: u64, t: f64, s: &DerivedScalars) -> Result<ConditionalState> {
    check_count_args(n, t, s)?;
    let z = sum_generator(&s.k_matrix()?, s.k_n()?);
    let zn = power(&z, n);
    let zn1 = zn * z;
    Ok(count_conditioned(init, n, t, s, &CountSums::from_powers(&zn, &zn1)))
}

/// Poisson pmf from the mode outward until the terms drop below
/// `rel_tol` times the peak. Returns `(first_n, weights)`.
fn poisson_weights(mean: f64, rel_tol: f64) -> (u64, Vec<f64>) {
    let mode = mean.floor() as u64;
    let ln_peak = mode as f64 * mean.ln() - mean - ln_gamma(mode as f64 + 1.0);
    let peak = if mean == 0.0 { 1.0 } else { ln_peak.exp() };
    let mut below = Vec::new();
    let mut p = peak;
    let mut n = mode;
    while n > 0 {
        p *= n as f64 / mean;
        if p < rel_tol * peak {
            break;
        }
        n -= 1;
        below.push(p);
    }
    let lo = mode - below.len() as u64;
    let mut w: Vec<f64> = below.into_iter().rev().collect();
    w.push(peak);
    let mut p = peak;
    let mut n = mode;
    loop {
        n += 1;
        p *= mean / n as f64;
        if p < rel_tol * peak {
            break;
        }
        w.push(p);
    }
    (lo, w)
}

/// Averages [`conditional_given_count`] over `Pi_t ~ Poisson(delta_N t)`.
pub fn poisson_mixture(init: ConditionalState, t: f64, s: &DerivedScalars) -> Result<ConditionalState> {
    if t == 0.0 {
        return Ok(init);
    }
    check_count_args(0, t, s)?;
    let (lo, w) = poisson_weights(s.delta_n * t, 1e-18);
    if lo + w.len() as u64 > MAX_EVENTS {
        return Err(invalid("expected event count too large"));
    }
    let z = sum_generator(&s.k_matrix()?, s.k_n()?);
    let mut zn = power(&z, lo);
    let mut zn1 = zn * z;
    let mut acc = [CompensatedSum::new(); 3];
    for (i, wi) in w.iter().enumerate() {
        let n = lo + i as u64;
        let c = count_conditioned(init, n, t, s, &CountSums::from_powers(&zn, &zn1));
        acc[0].add(wi * c.v[0]);
        acc[1].add(wi * c.v[1]);
        acc[2].add(wi * c.d);
        zn = zn1;
        zn1 *= z;
    }
    let total: f64 = CompensatedSum::from_iter(w.iter().copied()).value();
    Ok(ConditionalState::new(
        Vector2::new(acc[0].value() / total, acc[1].value() / total),
        acc[2].value() / total,
    ))
}

/// Monte Carlo over epoch sequences only: each replica samples the message
/// epochs from `cfg.law`, runs the conditional recursion and reports the
/// conditional moments at every observation time.
pub fn rao_blackwell_ensemble(init: ConditionalState, cfg: &SimConfig) -> Result<EnsembleStats> {
    cfg.validate()?;
    let s = crate::model::derived_scalars(&cfg.params)?;
    if !cfg.law.is_silent() {
        s.k_matrix()?;
    }
    let trajectories: Vec<Vec<MomentVector>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|i| epoch_replica(init, cfg, &s, i))
        .collect();
    Ok(summarize(&cfg.obs_grid, &trajectories))
}

fn epoch_replica(init: ConditionalState, cfg: &SimConfig, s: &DerivedScalars, index: u64) -> Vec<MomentVector> {
    let mut rng = replica_rng(cfg.master_seed, index | EPOCH_STREAM_BIT);
    let mut state = init;
    let mut t = 0.0;
    let mut next = cfg.law.sample(&mut rng);
    let mut out = Vec::with_capacity(cfg.obs_grid.len());
    for &t_obs in &cfg.obs_grid {
        while next <= t_obs {
            let moved = free_moment_step(state, next - t, s);
            state = ConditionalState::new(
                s.k.expect("checked") * moved.v,
                s.k_n.expect("checked") * moved.d,
            );
            t = next;
            next += cfg.law.sample(&mut rng);
        }
        out.push(free_moment_step(state, t_obs - t, s).to_moments(s.n));
    }
    out
}

/// Checks that an initial state is consistent with a genuine configuration.
pub fn validate_state(state: &ConditionalState) -> Result<()> {
    if state.v.iter().any(|x| !x.is_finite() || *x < 0.0) || !state.d.is_finite() {
        return Err(Error::Domain("moments must be finite with R, D >= 0".into()));
    }
    Ok(())
}

//! Configuration space, desynchronization functionals and the jump kernel.
//!
//! Node indices are 1-based throughout: node 1 is the time server, nodes
//! `2..=N+1` are sensors. A [`ClockConfig`] stores readings in a vector where
//! index 0 holds the server.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::CompensatedSum;

/// Physical parameters of the network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Number of sensor nodes.
    pub n: usize,
    /// Server clock frequency.
    pub r: f64,
    /// Sensor clock frequency.
    pub v: f64,
    /// Sensor noise strength (seconds per sqrt second).
    pub sigma: f64,
    /// Server message rate.
    pub alpha: f64,
    /// Per-sensor message rate.
    pub beta: f64,
}

impl ModelParams {
    pub fn new(n: usize, r: f64, v: f64, sigma: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self {
            n,
            r,
            v,
            sigma,
            alpha,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("N must be at least 1"));
        }
        if !(self.r.is_finite() && self.v.is_finite()) {
            return Err(invalid("clock frequencies must be finite"));
        }
        for (name, x) in [("sigma", self.sigma), ("alpha", self.alpha), ("beta", self.beta)] {
            if !x.is_finite() || x < 0.0 {
                return Err(invalid(format!("{name} must be finite and non-negative")));
            }
        }
        if self.beta > 0.0 && self.n < 2 {
            return Err(invalid("sensor-to-sensor messages need at least two sensors"));
        }
        Ok(())
    }

    /// Skew `v - r`.
    pub fn skew(&self) -> f64 {
        self.v - self.r
    }

    /// Total message rate `alpha + N beta`.
    pub fn total_rate(&self) -> f64 {
        self.alpha + self.n as f64 * self.beta
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }
}

/// Readings of all `N + 1` clocks at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockConfig {
    x: Vec<f64>,
}

impl ClockConfig {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(invalid("a configuration needs the server and at least one sensor"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("clock readings must be finite"));
        }
        Ok(Self { x })
    }

    pub fn zeros(n: usize) -> Self {
        Self { x: vec![0.0; n + 1] }
    }

    /// Number of sensors.
    pub fn n(&self) -> usize {
        self.x.len() - 1
    }

    pub fn server(&self) -> f64 {
        self.x[0]
    }

    pub fn sensors(&self) -> &[f64] {
        &self.x[1..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    /// Reading of node `i` (1-based).
    pub fn node(&self, i: usize) -> f64 {
        self.x[i - 1]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.x
    }
}

/// The triple (R, D, d).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentVector {
    /// R: mean squared offset of a sensor from the server.
    #[serde(rename = "R")]
    pub offset_sq: f64,
    /// D: mean squared offset over ordered sensor pairs.
    #[serde(rename = "D")]
    pub pairwise_sq: f64,
    /// d: mean sensor displacement from the server.
    #[serde(rename = "d")]
    pub displacement: f64,
}

impl MomentVector {
    pub const ZERO: Self = Self {
        offset_sq: 0.0,
        pairwise_sq: 0.0,
        displacement: 0.0,
    };

    pub fn new(offset_sq: f64, pairwise_sq: f64, displacement: f64) -> Self {
        Self {
            offset_sq,
            pairwise_sq,
            displacement,
        }
    }

    /// The quadratic pair (R, D).
    pub fn quadratic(&self) -> Vector2<f64> {
        Vector2::new(self.offset_sq, self.pairwise_sq)
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.offset_sq, self.pairwise_sq, self.displacement]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Scaled quantities shared by the recursion, the closed forms and the ODE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedScalars {
    /// b = v - r.
    pub skew: f64,
    /// u = 2b.
    pub u: f64,
    pub alpha_n: f64,
    pub beta_n: f64,
    /// delta_N = alpha + N beta.
    pub delta_n: f64,
    /// k_N = 1 - alpha_N / delta_N; `None` when delta_N = 0.
    pub k_n: Option<f64>,
    /// q0 = u (1, 0).
    pub q0: Vector2<f64>,
    /// q1 = sigma^2 (1, 2).
    pub q1: Vector2<f64>,
    /// q2 = b^2 (1, 0).
    pub q2: Vector2<f64>,
    /// L_N, the generator of (R, D) under jumps.
    pub l_n: Matrix2<f64>,
    /// K = Id + L_N / delta_N; `None` when delta_N = 0.
    pub k: Option<Matrix2<f64>>,
    /// Number of sensors the scalars were computed for.
    pub n: usize,
}

impl DerivedScalars {
    pub fn k_n(&self) -> Result<f64> {
        self.k_n.ok_or(Error::DegenerateRates)
    }

    pub fn k_matrix(&self) -> Result<Matrix2<f64>> {
        self.k.ok_or(Error::DegenerateRates)
    }
}

pub fn derived_scalars(params: &ModelParams) -> Result<DerivedScalars> {
    params.validate()?;
    let n = params.n as f64;
    let b = params.skew();
    let alpha_n = params.alpha / n;
    let beta_n = if params.n > 1 {
        params.beta / (n - 1.0)
    } else {
        0.0
    };
    let delta_n = params.total_rate();
    let l_n = Matrix2::new(-alpha_n, 0.0, 2.0 * alpha_n, -2.0 * (alpha_n + beta_n));
    let (k_n, k) = if delta_n > 0.0 {
        (
            Some(1.0 - alpha_n / delta_n),
            Some(Matrix2::identity() + l_n / delta_n),
        )
    } else {
        (None, None)
    };
    let s2 = params.sigma * params.sigma;
    Ok(DerivedScalars {
        skew: b,
        u: 2.0 * b,
        alpha_n,
        beta_n,
        delta_n,
        k_n,
        q0: Vector2::new(2.0 * b, 0.0),
        q1: Vector2::new(s2, 2.0 * s2),
        q2: Vector2::new(b * b, 0.0),
        l_n,
        k,
        n: params.n,
    })
}

/// R, D and d of a single configuration.
///
/// D uses the ordered-pair average `1/(N(N-1)) sum_{j1 != j2} (x_j2 - x_j1)^2`,
/// which equals twice the sample variance of the sensor readings. D is 0 for
/// a single sensor.
pub fn moments_of_config(config: &ClockConfig) -> MomentVector {
    moments_of_readings(config.server(), config.sensors())
}

/// Same as [`moments_of_config`] for a server reading and a slice of sensor
/// readings.
pub fn moments_of_readings(x1: f64, sensors: &[f64]) -> MomentVector {
    let n = sensors.len() as f64;

    let mut sum_y = CompensatedSum::new();
    let mut sum_y2 = CompensatedSum::new();
    for &xj in sensors {
        let y = xj - x1;
        sum_y.add(y);
        sum_y2.add(y * y);
    }
    let mean = sum_y.value() / n;
    let pairwise = if sensors.len() > 1 {
        let ss: CompensatedSum = sensors.iter().map(|&xj| (xj - x1 - mean).powi(2)).collect();
        2.0 * ss.value() / (n - 1.0)
    } else {
        0.0
    };
    MomentVector {
        offset_sq: sum_y2.value() / n,
        pairwise_sq: pairwise,
        displacement: mean,
    }
}

/// A message from `sender` to `receiver` (1-based node indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodePair {
    pub sender: usize,
    pub receiver: usize,
}

impl NodePair {
    pub fn new(sender: usize, receiver: usize) -> Result<Self> {
        if receiver == 1 {
            return Err(Error::ForbiddenReceiver);
        }
        if sender == 0 || receiver == 0 {
            return Err(invalid("node indices are 1-based"));
        }
        if sender == receiver {
            return Err(invalid("a node cannot message itself"));
        }
        Ok(Self { sender, receiver })
    }
}

/// The synchronizing jump: the receiver adopts the sender's reading.
pub fn jump_map(config: &ClockConfig, pair: NodePair) -> Result<ClockConfig> {
    let len = config.as_slice().len();
    if pair.receiver == 1 {
        return Err(Error::ForbiddenReceiver);
    }
    if pair.sender > len || pair.receiver > len || pair.sender == 0 {
        return Err(invalid("node index out of range"));
    }
    let mut out = config.clone();
    out.x[pair.receiver - 1] = config.x[pair.sender - 1];
    Ok(out)
}

/// Every admissible (sender, receiver) pair with its selection probability
/// given that a message occurs.
pub fn pair_distribution(params: &ModelParams) -> Result<Vec<(NodePair, f64)>> {
    let s = derived_scalars(params)?;
    if s.delta_n <= 0.0 {
        return Err(Error::DegenerateRates);
    }
    let n = params.n;
    let p_server = s.alpha_n / s.delta_n;
    let p_sensor = s.beta_n / s.delta_n;
    let mut out = Vec::with_capacity(n * n);
    for j in 2..=n + 1 {
        out.push((NodePair { sender: 1, receiver: j }, p_server));
    }
    for i in 2..=n + 1 {
        for j in 2..=n + 1 {
            if i != j {
                out.push((NodePair { sender: i, receiver: j }, p_sensor));
            }
        }
    }
    Ok(out)
}

/// Expected moments right after one jump, by exhaustive enumeration of the
/// pair distribution.
pub fn expected_post_jump_moments(config: &ClockConfig, params: &ModelParams) -> Result<MomentVector> {
    if config.n() != params.n {
        return Err(invalid("configuration size does not match N"));
    }
    let mut acc = [CompensatedSum::new(); 3];
    for (pair, p) in pair_distribution(params)? {
        if p == 0.0 {
            continue;
        }
        let m = moments_of_config(&jump_map(config, pair)?).to_array();
        for (a, v) in acc.iter_mut().zip(m) {
            a.add(p * v);
        }
    }
    Ok(MomentVector::new(acc[0].value(), acc[1].value(), acc[2].value()))
}

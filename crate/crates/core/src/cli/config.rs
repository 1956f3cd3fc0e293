//! JSON run configuration.
//!
//! ```json
//! {
//!   "version": 1,
//!   "params": { "n": 50, "sigma": 0.5, "v": 1.1, "alpha": 2.0, "beta": 1.0 },
//!   "output": "out.csv",
//!   "simulate": { "obs_grid": [10, 50, 200], "replicas": 20000, "seed": 7 },
//!   "analytic": { "t_grid": [0, 1, 10] },
//!   "compare": { "z_threshold": 4.0, "estimator": "direct" },
//!   "phase_scan": { "gammas": [0.25, 0.75], "n_grid": [1024, 4096, 16384, 65536], "s": 1.0 }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{ModelParams, MomentVector};
use crate::simulator::{InitialCondition, InterEventLaw, SimConfig};

pub const CONFIG_VERSION: u32 = 1;

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub n: usize,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "one")]
    pub v: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
}

impl ParamsSection {
    pub fn to_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.n, self.r, self.v, self.sigma, self.alpha, self.beta)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    #[default]
    Direct,
    RaoBlackwell,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default = "default_obs_grid")]
    pub obs_grid: Vec<f64>,
    /// Defaults to the last observation time.
    pub t_end: Option<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the Poisson flow with rate `alpha + N beta`.
    pub law: Option<InterEventLaw>,
    #[serde(default = "default_initial")]
    pub initial: InitialCondition,
}

fn default_obs_grid() -> Vec<f64> {
    vec![1.0, 2.0, 5.0, 10.0]
}

fn default_replicas() -> usize {
    1000
}

fn default_initial() -> InitialCondition {
    InitialCondition::Zeros
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            obs_grid: default_obs_grid(),
            t_end: None,
            replicas: default_replicas(),
            seed: 0,
            law: None,
            initial: default_initial(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSection {
    /// Defaults to the simulate observation grid.
    pub t_grid: Option<Vec<f64>>,
    /// Initial `(R, D, d)`; defaults to the expected moments of the
    /// simulate initial condition.
    pub init: Option<MomentVector>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default = "default_z")]
    pub z_threshold: f64,
    #[serde(default)]
    pub estimator: Estimator,
}

fn default_z() -> f64 {
    4.0
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            z_threshold: default_z(),
            estimator: Estimator::Direct,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseScanSection {
    pub gammas: Vec<f64>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "one")]
    pub s: f64,
}

fn default_n_grid() -> Vec<usize> {
    (10..=16).map(|k| 1usize << k).collect()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub params: ParamsSection,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub analytic: AnalyticSection,
    #[serde(default)]
    pub compare: CompareSection,
    pub phase_scan: Option<PhaseScanSection>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        cfg.params.to_params()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn params(&self) -> Result<ModelParams> {
        self.params.to_params()
    }

    /// The simulation described by the `simulate` section.
    pub fn sim_config(&self, seed_override: Option<u64>) -> Result<SimConfig> {
        let params = self.params()?;
        let sec = &self.simulate;
        let mut cfg = SimConfig::new(params, sec.obs_grid.clone())
            .with_replicas(sec.replicas)
            .with_seed(seed_override.unwrap_or(sec.seed))
            .with_initial(sec.initial.clone());
        if let Some(law) = sec.law {
            cfg = cfg.with_law(law);
        }
        if let Some(t_end) = sec.t_end {
            cfg = cfg.with_t_end(t_end);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn initial_moments(&self) -> Result<MomentVector> {
        match self.analytic.init {
            Some(m) => Ok(m),
            None => self.simulate.initial.expected_moments(self.params.n),
        }
    }

    pub fn analytic_grid(&self) -> &[f64] {
        self.analytic.t_grid.as_deref().unwrap_or(&self.simulate.obs_grid)
    }
}

//! Stochastic clock-synchronization network: N drifting, noisy sensor clocks
//! and one perfect time server exchanging adopt-my-reading messages.
//!
//! * [`model`]: configurations, the functionals R, D, d and the jump kernel.
//! * [`simulator`]: exact event-driven Monte Carlo.
//! * [`conditional`]: moments conditioned on message epochs and the
//!   Rao-Blackwellized estimator.
//! * [`analytics`]: closed-form expected moments, limits and the moment ODE.
//! * [`phase`]: behavior on time scales `t = s N^gamma`.
//! * [`cli`]: the `synclab` batch front end.

// Negated comparisons (`!(x > 0.0)`) deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod cli;
pub mod conditional;
pub mod error;
pub mod model;
pub mod oracle;
pub mod phase;
pub mod phi;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
pub use model::{ClockConfig, ModelParams, MomentVector};

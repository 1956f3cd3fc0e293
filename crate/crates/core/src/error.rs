use std::path::PathBuf;

/// Errors raised by the model, simulator and analytics.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Total message rate `alpha + N beta` is zero, so the jump kernel is undefined.
    #[error("degenerate rates: total message rate is zero")]
    DegenerateRates,

    #[error("the server (node 1) never receives messages")]
    ForbiddenReceiver,

    #[error("coincident eigenvalues: alpha_N + 2 beta_N = 0")]
    CoincidentEigenvalues,

    #[error("no stationary limit without server messages (alpha = 0)")]
    NoStationaryLimit,

    #[error("no synchronization phase without server messages (alpha = 0, gamma >= 1)")]
    NoSynchronizationPhase,

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

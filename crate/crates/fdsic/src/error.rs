//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants carry enough context
//! to tell which precondition failed and with which values; the harness
//! additionally wraps errors with the pipeline stage that raised them (see
//! [`crate::harness::RunError`]).

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by signal, channel, front-end, estimator, metrics and
/// harness operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A signal failed basic validation (empty, non-finite sample, bad rate).
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    /// Two signals that must share a sample rate or length do not.
    #[error("mismatched signals: {0}")]
    MismatchedSignals(String),

    /// A bit stream or symbol stream failed validation.
    #[error("invalid symbol stream: {0}")]
    InvalidSymbols(String),

    /// A carrier/LO/sample-rate combination violates the Nyquist criterion or
    /// an integer samples-per-symbol requirement.
    #[error("invalid frequency plan: {0}")]
    FrequencyPlan(String),

    /// A channel description failed validation.
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    /// A front-end parameter is out of its documented domain.
    #[error("invalid front-end parameters: {0}")]
    InvalidFrontend(String),

    /// An estimator configuration or call violates a precondition.
    #[error("invalid estimator input: {0}")]
    InvalidEstimator(String),

    /// The least-squares system is numerically rank deficient.
    #[error(
        "rank-deficient least-squares system: column {column} has R diagonal {diagonal:.3e} \
         (threshold {threshold:.3e}); the transmit waveforms do not excite every lag"
    )]
    RankDeficient {
        column: usize,
        diagonal: f64,
        threshold: f64,
    },

    /// A metrics call violates a precondition (band, segment length, ...).
    #[error("invalid metrics input: {0}")]
    InvalidMetrics(String),

    /// An experiment configuration failed validation.
    #[error("invalid config: {0}")]
    Config(String),

    /// Configuration file could not be parsed.
    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    /// Report or config file I/O failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

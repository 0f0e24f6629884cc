use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid transition: {0}")]
    InvalidTransition(String),

    #[error("steady state is ambiguous: null space has dimension {dimension}")]
    AmbiguousSteadyState { dimension: usize },

    #[error("integration failed at t = {t:e} s after {steps} steps (last step {step:e} s): {reason}")]
    IntegrationFailure {
        t: f64,
        step: f64,
        steps: usize,
        reason: String,
    },

    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("quadrature did not converge: change {achieved:e} after {panels} panels, wanted {tolerance:e}")]
    Quadrature {
        achieved: f64,
        tolerance: f64,
        panels: usize,
    },

    #[error("{what} = {value} outside attainable range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("timestamps not sorted at record {index} (byte {offset})")]
    Unsorted { index: u64, offset: u64 },

    #[error("stream contains no trigger events")]
    NoTriggers,

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}

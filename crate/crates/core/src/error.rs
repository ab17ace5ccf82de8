use thiserror::Error;

/// Errors produced by network validation, numerical routines and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("{entity} references unknown {referent} {id}")]
    DanglingReference {
        entity: String,
        referent: &'static str,
        id: usize,
    },

    #[error("{location}: {quantity} must be positive, got {value}")]
    NonpositiveParameter {
        location: String,
        quantity: &'static str,
        value: f64,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("{network} network is not connected ({detail})")]
    Disconnected {
        network: &'static str,
        detail: String,
    },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("gas step matrix is singular: {0}")]
    SingularSystem(String),

    #[error("nonpositive density sum {value} in friction denominator of pipeline {pipeline}")]
    NonpositiveDensity { pipeline: String, value: f64 },

    #[error("steady-state solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    SteadyStateDiverged { iterations: usize, residual: f64 },

    #[error("transition function failed at cubature point {point}: {reason}")]
    CubaturePoint { point: usize, reason: String },

    #[error("innovation covariance factor is singular at channel {channel} ({name})")]
    SingularInnovation { channel: usize, name: String },

    #[error("filter step {step} aborted: {source}")]
    FilterStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("training diverged: loss is not finite at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("degenerate normalization bounds for node {node}: min {min} >= max {max}")]
    DegenerateBounds { node: usize, min: f64, max: f64 },

    #[error("MAPE undefined: truth entry {index} is zero")]
    ZeroTruth { index: usize },

    #[error("missing input for node {node}: {what}")]
    MissingInput { node: usize, what: &'static str },

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A weight vector with no positive mass cannot be normalized.
    #[error("degenerate weights: no positive mass to normalize")]
    DegenerateWeights,

    /// Normalization rejects negative inputs; projection clips them instead.
    #[error("negative weight {0} is outside the simplex")]
    NegativeWeight(f64),

    /// Position or velocity updates require finite entries.
    #[error("non-finite entry in weight update")]
    NonFinite,

    /// Velocity, position and best vectors must share one shape.
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    /// Survival fitness is defined only for particles reset this iteration.
    #[error("particle {0} was not reset this iteration; survival fitness is undefined")]
    NotReset(usize),

    /// Differential comparison requires traces from the same test.
    #[error("traces come from different tests: dut={dut}, golden={golden}")]
    TraceIdMismatch { dut: String, golden: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

/// Errors raised while loading, validating or constructing domain values.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("unsupported schema_version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("invalid {entity}: {reason}")]
    Validation { entity: String, reason: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("infeasible signal plan at intersection `{intersection}`: {reason}")]
    InfeasiblePlan { intersection: String, reason: String },
}

impl ModelError {
    pub(crate) fn validation(entity: impl Into<String>, reason: impl Into<String>) -> Self {
        ModelError::Validation {
            entity: entity.into(),
            reason: reason.into(),
        }
    }
}

/// Errors raised by the microsimulator.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(
        "gridlock: vehicle {vehicle} on {location} delayed {delay:.1} s at t={time:.1} s (bound {bound:.0} s)"
    )]
    Gridlock {
        vehicle: u64,
        location: String,
        time: f64,
        delay: f64,
        bound: f64,
    },

    #[error("trace output failed: {0}")]
    Trace(String),
}

/// Errors raised by surrogate sampling, fitting and evaluation.
#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("sample (lane `{lane}`, n={n}, g1={g1}) failed: {source}")]
    Sample {
        lane: String,
        n: u32,
        g1: f64,
        #[source]
        source: SimError,
    },

    #[error("missing sample for lane `{lane}` at n={n}, g1={g1}")]
    MissingPoint { lane: String, n: u32, g1: f64 },

    #[error("lane `{0}` has no surrogate")]
    UnknownLane(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Errors raised by the optimizer and solution validation.
#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("surrogate set is empty")]
    EmptySurrogate,

    #[error("no individual satisfied the delay constraint")]
    NoFeasibleSolution,

    #[error("invalid GA parameters: {0}")]
    Params(String),

    #[error("solution precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Sim(#[from] SimError),
}

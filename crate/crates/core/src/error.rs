use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("symbol {0:?} is not in the alphabet")]
    InvalidSymbol(char),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The supplied past is too short to contain a context.
    #[error("past {0:?} does not determine a context")]
    NeedMorePast(String),

    #[error(
        "stationary law did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("state space of {states} states exceeds the dense solver cap of {cap}")]
    ModelTooLarge { states: usize, cap: usize },

    #[error("conditional probability given {0:?} is undefined (zero probability)")]
    UndefinedConditional(String),

    #[error("loss-of-memory coefficients are not summable: {0}")]
    SummabilityViolation(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("depth budget {depth}+1 exceeds the sample length {n}")]
    DepthTooLarge { depth: usize, n: usize },

    #[error("word of length {len} exceeds the stored depth {max}")]
    DepthExceeded { len: usize, max: usize },

    #[error("sample of length {n} is too short for depth {depth}")]
    DegenerateSample { n: usize, depth: usize },

    #[error("enumeration of {size} words exceeds the limit of {limit}")]
    EnumerationTooLarge { size: u128, limit: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error reports a violated mathematical precondition, as
    /// opposed to malformed input.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::PreconditionViolation(_)
                | Error::SummabilityViolation(_)
                | Error::NoConvergence { .. }
                | Error::UndefinedConditional(_)
        )
    }
}

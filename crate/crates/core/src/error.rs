use crate::model::ConstructId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unknown construct {0}")]
    UnknownConstruct(String),

    #[error("node {0:?} is not part of the graph")]
    UnknownNode(ConstructId),

    #[error("graph contains a cycle through {0:?}")]
    Cycle(Vec<ConstructId>),

    #[error("line {line}: {message}")]
    MalformedInput { line: usize, message: String },

    #[error("value {value} for item {item} is outside the scale {min}..{max}")]
    OutOfBounds {
        item: String,
        value: f64,
        min: i32,
        max: i32,
    },

    #[error("unknown item id {0}")]
    UnknownItem(String),

    #[error("duplicate answer for respondent {respondent}, wave {wave}, item {item}")]
    DuplicateAnswer {
        respondent: String,
        wave: String,
        item: String,
    },

    #[error("respondent {respondent} has no usable items for construct {construct:?}")]
    NoUsableItems {
        respondent: String,
        construct: ConstructId,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parameter {0} has no prior")]
    MissingPrior(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite log density at initialization of chain {chain} after {attempts} attempts")]
    NonFiniteInit { chain: usize, attempts: usize },

    #[error("diagnostics need at least two chains, got {0}")]
    TooFewChains(usize),

    #[error("grid too small: {mass:.3e} of the posterior mass lies on the boundary")]
    GridTooSmall { mass: f64 },

    #[error("posterior has not converged: {0}")]
    Unconverged(String),

    #[error("hash mismatch: {0}")]
    HashMismatch(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        Error::MalformedInput {
            line,
            message: err.to_string(),
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("invalid weight {weight} on edge ({i}, {j})")]
    InvalidWeight { i: usize, j: usize, weight: f64 },

    #[error("node {index} out of range for a graph with {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("conductance is undefined for an empty or zero-volume set")]
    EmptyOrZeroVolume,

    #[error("search budget of {0} branch nodes exceeded")]
    BudgetExceeded(u64),

    #[error("exhaustive enumeration is limited to {max} nodes, graph has {n}")]
    TooLarge { n: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("non-finite loss at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    #[error("certificate of kind {certificate} cannot be checked against a {objective} objective")]
    KindMismatch {
        certificate: &'static str,
        objective: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

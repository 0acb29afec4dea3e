use thiserror::Error;

/// Errors produced by the k-spin toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tuple: {0}")]
    InvalidTuple(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The request exceeds a hard size limit (enumeration or dense materialization).
    #[error("capability limit exceeded: {0}")]
    Capability(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("generation failed: {0}")]
    GenerationFailure(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A per-node fit failed; `node` is 0-based.
    #[error("fit failed at node {}: {source}", node + 1)]
    NodeFit {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by bad input rather than numerics or I/O.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidTuple(_)
            | Error::InvalidSample(_)
            | Error::Shape(_)
            | Error::InvalidArgument(_)
            | Error::Parse { .. } => true,
            Error::NodeFit { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator has a non-finite entry")]
    NonFinite,

    #[error("operator is not hermitian (relative deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace must vanish, found {0:e}")]
    NonzeroTrace(f64),

    #[error("support {support:?} is not contained in volume {volume:?}")]
    SupportNotInVolume {
        support: Vec<usize>,
        volume: Vec<usize>,
    },

    #[error("duplicate site {0}")]
    DuplicateSite(usize),

    #[error("empty site set where a nonempty one is required")]
    EmptySupport,

    #[error("{what} of size {size} exceeds the cap {cap}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("duplicate interaction term on {0:?}")]
    DuplicateTerm(Vec<usize>),

    #[error("unknown interaction set {0:?}")]
    UnknownSet(Vec<usize>),

    #[error("edge ({0}, {1}) is not in the graph")]
    UnknownEdge(usize, usize),

    #[error("vertex {0} is out of range")]
    UnknownVertex(usize),

    #[error("imaginary-time conjugation would overflow: beta * spectral width = {0}")]
    Overflow(f64),

    #[error("no convergence after {iterations} iterations (last step {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("certificate not established: {0}")]
    NoCertificate(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

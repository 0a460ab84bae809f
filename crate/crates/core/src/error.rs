use thiserror::Error;

/// Errors raised by node generation, the approximation engines and the analysis drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An algebraic profile evaluated at zero distance. Engines resolve this by snapping
    /// to the cardinal vector of the coincident node.
    #[error("weight profile diverges at zero distance")]
    DivergentAtZero,

    #[error("ill-conditioned system (smallest pivot {smallest_pivot:e})")]
    IllConditioned { smallest_pivot: f64 },

    #[error("node set is not unisolvent for the polynomial space (rank {rank} < {dimension})")]
    NotUnisolvent { rank: usize, dimension: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex stopped after {0} iterations without converging")]
    IterationLimit(usize),

    #[error("singular basis matrix")]
    SingularBasis,

    #[error("series diverges: {0}")]
    DivergentSeries(String),

    #[error("cone angle {0} exceeds pi/5; closed-form constants are only available below it")]
    UnsupportedAngle(f64),

    #[error("could not draw distinct perturbed nodes after {0} attempts")]
    PerturbationFailed(usize),

    #[error("scan is not certifiable: {failed} of {total} evaluation points failed ({first})")]
    ScanFailed {
        failed: usize,
        total: usize,
        first: Box<Error>,
    },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the numerical routines and the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty window: lo={lo} > hi={hi}")]
    EmptyWindow { lo: i64, hi: i64 },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("kernel invariant violated: {0}")]
    KernelInvariant(String),

    #[error("potential not defined at site {site}")]
    PotentialOutOfRange { site: i64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("linear solve failed: residual {residual:.3e} exceeds {tolerance:.1e} (condition estimate {condition:.3e})")]
    Solver {
        residual: f64,
        tolerance: f64,
        condition: f64,
    },

    #[error("zero pivot at row {row} in banded factorization")]
    ZeroPivot { row: usize },

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.1e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("eigendecomposition failed to converge")]
    Eigen,

    #[error("config error: {0}")]
    Config(String),

    #[error("experiment `{experiment}`: {source}")]
    Experiment {
        experiment: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_experiment(self, experiment: &str) -> Self {
        Error::Experiment {
            experiment: experiment.to_string(),
            source: Box::new(self),
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or argument; the message carries the offending field path.
    #[error("bad config: {0}")]
    BadConfig(String),

    /// A sampled quantity does not decay at the grid boundary, so the grid cannot
    /// stand in for the real line.
    #[error("under-resolved: {what} (boundary ratio {ratio:.3e} > {tol:.1e})")]
    UnderResolved { what: String, ratio: f64, tol: f64 },

    #[error("CFL violation: courant number {courant:.4} exceeds {limit}")]
    CflViolation { courant: f64, limit: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian")]
    SingularJacobian,

    #[error("degenerate derivative: {0}")]
    DegenerateDerivative(String),

    #[error("not monotone: {0}")]
    NonMonotone(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable tag used in failure reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BadConfig(_) => "BadConfig",
            Error::UnderResolved { .. } => "UnderResolved",
            Error::CflViolation { .. } => "CFLViolation",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::SingularJacobian => "SingularJacobian",
            Error::DegenerateDerivative(_) => "DegenerateDerivative",
            Error::NonMonotone(_) => "NonMonotone",
            Error::Format(_) => "FormatError",
            Error::Io(_) => "Io",
        }
    }

    pub(crate) fn under_resolved(what: impl Into<String>, ratio: f64, tol: f64) -> Self {
        Error::UnderResolved {
            what: what.into(),
            ratio,
            tol,
        }
    }
}

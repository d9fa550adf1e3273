use thiserror::Error;

/// Errors raised by the covariance-matrix toolkit and everything built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the range where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index error: {0}")]
    Index(String),
    /// An iterative or closed-form numerical routine could not produce a trustworthy answer.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A covariance matrix violates the uncertainty principle beyond tolerance.
    #[error("physicality error: {0}")]
    Physicality(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// The matrix handed to the sampler is not positive semidefinite.
    #[error("factorization error: {0}")]
    Factorization(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// True for errors caused by bad user input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Index(_) | Error::Dimension(_) | Error::InsufficientData(_) | Error::Parse(_)
        )
    }
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

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Non-fatal conditions reported alongside a result.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Every sample was identical; the estimate carries no information.
    Degenerate(String),
    /// The objective changed sign more than once on the pre-scan grid.
    NonMonotonic { sign_changes: usize },
    /// The estimated matrix was pulled back onto the physical set.
    Projected { max_shift: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::Degenerate(m) => write!(f, "degenerate: {m}"),
            Warning::NonMonotonic { sign_changes } => {
                write!(f, "non-monotonic objective: {sign_changes} sign changes on pre-scan")
            }
            Warning::Projected { max_shift } => write!(f, "physicality projection moved entries by up to {max_shift:.3e}"),
        }
    }
}

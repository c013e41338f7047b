use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum HtodaError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("convergence error: {0}")]
    Convergence(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("monotonicity error: {0}")]
    Monotonicity(String),

    #[error("quadrature error: {0}")]
    Quadrature(String),

    #[error("convexity error: {message} (offending eigenvalue {eigenvalue})")]
    Convexity { message: String, eigenvalue: f64 },

    #[error("hypothesis error: {0}")]
    Hypothesis(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl HtodaError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        HtodaError::Domain(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        HtodaError::Parameter(msg.into())
    }

    pub(crate) fn hypothesis(msg: impl Into<String>) -> Self {
        HtodaError::Hypothesis(msg.into())
    }

    /// Short machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            HtodaError::Domain(_) => "DomainError",
            HtodaError::Convergence(_) => "ConvergenceError",
            HtodaError::Parameter(_) => "ParameterError",
            HtodaError::Monotonicity(_) => "MonotonicityError",
            HtodaError::Quadrature(_) => "QuadratureError",
            HtodaError::Convexity { .. } => "ConvexityError",
            HtodaError::Hypothesis(_) => "HypothesisError",
            HtodaError::Grid(_) => "GridError",
            HtodaError::Config(_) => "ConfigError",
            HtodaError::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for HtodaError {
    fn from(e: std::io::Error) -> Self {
        HtodaError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HtodaError>;

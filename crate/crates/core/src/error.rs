use thiserror::Error;

/// Errors raised by model construction, numerical evaluation and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain on which the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Model parameters violate a model invariant.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The operation is not defined for this model variant.
    #[error("unsupported model: {0}")]
    Unsupported(String),

    /// Two arguments are individually valid but inconsistent with each other.
    #[error("argument error: {0}")]
    Argument(String),

    /// Numerical Laplace inversion failed or the cross-check methods disagree.
    #[error("inversion did not converge: {0}")]
    NonConvergence(String),

    /// Adaptive quadrature failed to reach its tolerance.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// A formula produced a value outside its admissible range.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// A simulation configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input could not be parsed or read.
    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    /// Short machine-readable code used in CLI error objects.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidModel(_) => "invalid_model",
            Error::Unsupported(_) => "unsupported",
            Error::Argument(_) => "argument",
            Error::NonConvergence(_) => "non_convergence",
            Error::Quadrature(_) => "quadrature",
            Error::Consistency(_) => "consistency",
            Error::Config(_) => "config",
            Error::Input(_) => "input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A required configuration key is absent.
    #[error("missing required parameter `{0}`")]
    MissingKey(String),

    /// A configuration value could not be parsed.
    #[error("cannot parse configuration: {0}")]
    Parse(String),

    /// A parameter or argument violates a documented rule.
    #[error("validation failed: {0}")]
    Validation(String),

    /// Adaptive quadrature ran out of subdivisions.
    #[error(
        "quadrature did not converge: estimated error {achieved:.3e} exceeds requested {requested:.3e} after {subdivisions} subdivisions"
    )]
    Quadrature {
        achieved: f64,
        requested: f64,
        subdivisions: usize,
    },

    /// The ODE integrator could not meet its tolerance.
    #[error("integration failed at t = {time:.6e} s: {reason}")]
    Integration { time: f64, reason: String },

    /// A density matrix lost trace, hermiticity or positivity.
    #[error("numerical integrity violated: {0}")]
    Integrity(String),

    /// A formula was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A least-squares fit failed to converge.
    #[error("fit did not converge after {iterations} iterations (residual norm {residual_norm:.3e}): {reason}")]
    Fit {
        iterations: usize,
        residual_norm: f64,
        reason: String,
    },

    /// Calibrated model quantities are physically inconsistent.
    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    /// A linear system or null space is degenerate.
    #[error("degenerate system: {0}")]
    Degenerate(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::MissingKey(_) | Error::Parse(_) | Error::Validation(_)
        )
    }
}

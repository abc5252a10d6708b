use thiserror::Error;

/// Errors raised while building densities, evaluating functionals or
/// checking inequalities.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },

    #[error("integral diverges ({0})")]
    DivergentIntegral(String),

    #[error("quadrature did not converge: estimate {value:e}, error {error:e}")]
    NotConverged { value: f64, error: f64 },

    #[error("point {x} lies outside the open support ({lo}, {hi})")]
    OutsideSupport { x: f64, lo: f64, hi: f64 },

    #[error("density `{family}` is not differentiable to order {order}")]
    NotDifferentiable { family: String, order: usize },

    #[error("density is not normalizable: {0}")]
    NotNormalizable(String),

    #[error("density has zero mass")]
    ZeroMass,

    #[error("supports differ: ({0}, {1}) vs ({2}, {3})")]
    SupportMismatch(f64, f64, f64, f64),

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse density spec `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to invalid
    /// inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteIntegrand { .. }
                | Error::DivergentIntegral(_)
                | Error::NotConverged { .. }
                | Error::NotNormalizable(_)
                | Error::ZeroMass
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

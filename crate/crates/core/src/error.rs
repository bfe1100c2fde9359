use crate::integrate::QuadratureResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: error estimate {:.3e} exceeds tolerance {tol:.3e}", partial.error_estimate)]
    QuadratureNonConvergence { partial: QuadratureResult, tol: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:.3e}, energy {energy})")]
    EigenNonConvergence {
        iterations: usize,
        residual: f64,
        energy: f64,
    },

    #[error("{component} failed: {source}")]
    Component {
        component: String,
        /// Components finished before the failure, as (name, value, error estimate).
        partial: Vec<(String, f64, f64)>,
        #[source]
        source: Box<Error>,
    },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("no sign change of the shooting residual on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("step size underflow in radial integration (h = {0:e})")]
    StepUnderflow(f64),
}

impl Error {
    /// True for failures of an iterative or adaptive numerical method, as
    /// opposed to rejected inputs.
    pub fn is_non_convergence(&self) -> bool {
        match self {
            Error::QuadratureNonConvergence { .. }
            | Error::EigenNonConvergence { .. }
            | Error::StepUnderflow(_) => true,
            Error::Component { source, .. } => source.is_non_convergence(),
            _ => false,
        }
    }
}

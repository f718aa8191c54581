use thiserror::Error;

use crate::gl::GLState;

/// Errors produced by grid construction, field assembly, the eigensolver
/// and the GL minimizer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("resolution insufficient: {0}")]
    ResolutionInsufficient(String),

    #[error("hole unresolved: radius {radius} is below two grid spacings ({min})")]
    HoleUnresolved { radius: f64, min: f64 },

    #[error("hole too large: radius {radius} must stay below the inradius {limit}")]
    HoleTooLarge { radius: f64, limit: f64 },

    #[error("singular segment: ({0}, {1}) -> ({2}, {3}) passes through the flux point")]
    SingularSegment(f64, f64, f64, f64),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence { iterations: usize, best_residual: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("m_* iteration did not converge after {iterations} iterations (quotient {quotient}, change {change:e})")]
    QuotientNoConvergence {
        iterations: usize,
        quotient: f64,
        change: f64,
    },

    #[error("line search failed at iteration {iteration} (energy {energy})")]
    LineSearch {
        iteration: usize,
        energy: f64,
        state: Box<GLState>,
    },

    #[error("non-finite energy encountered")]
    NonFinite,

    #[error("precondition violated: kappa^2 = {kappa_sq} must be below {bound}")]
    KappaBound { kappa_sq: f64, bound: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

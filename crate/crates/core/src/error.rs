use thiserror::Error;

use crate::nonlinearity::expr::ParseError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("argument outside domain: {0}")]
    OutOfDomain(String),

    /// The upper tail of a potential integral diverges; run the Osgood check first.
    #[error("divergent tail: {0}")]
    DivergentTail(String),

    #[error("eigen iteration stagnated after {iterations} iterations (residual {residual:e})")]
    Stagnation { iterations: usize, residual: f64 },

    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    #[error("trace too short: {0}")]
    TraceTooShort(String),

    #[error("z0 = {z0} is not admissible: it must lie strictly below {bound}")]
    InadmissibleZ0 { z0: f64, bound: f64 },

    #[error("criterion integral does not converge ({0}); use the blow-up branch instead")]
    CriterionNotConvergent(String),

    #[error("missing parameter: {0}")]
    MissingParameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

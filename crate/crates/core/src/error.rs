use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("monomial of total degree {degree} exceeds the limit of {limit}")]
    DegreeOverflow { degree: u32, limit: u32 },

    #[error("Gaussian exponent is not integrable: A={a}, B={b}, C={c} (need A>0, B>0, AB-C^2>0)")]
    NotIntegrable { a: f64, b: f64, c: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge (residual {residual:e})")]
    NoConvergence { what: String, residual: f64 },

    #[error("eigensolver did not converge on block d={block}")]
    BlockNoConvergence { block: i64 },

    #[error("x={x} lies outside the classically allowed interval (-{turning}, {turning})")]
    OutsideAllowedRegion { x: f64, turning: f64 },
}

impl Error {
    /// True for failures of an iterative numerical method, as opposed to bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::BlockNoConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are split into two groups: input validation (the caller asked
/// for something ill-formed) and numerical failure (the inputs were fine but
/// the numerics could not produce a trustworthy answer). The CLI maps the
/// two groups to different exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("point {index} of the sequence is zero (the origin is excluded)")]
    ZeroPoint { index: usize },

    #[error("point {index} of the sequence is not finite")]
    NonFinitePoint { index: usize },

    #[error("evaluation at z = 0 is undefined")]
    EvaluationAtOrigin,

    #[error("test function evaluation failed at x = {x}: {reason}")]
    EvaluationFailure { x: f64, reason: String },

    #[error("duplicate integer {n} in explicit assignment")]
    DuplicateInteger { n: i64 },

    #[error("family `{family}` is inadmissible: no candidate passed membership")]
    InadmissibleFamily { family: String },

    #[error("quadrature did not converge at x = {x}: {reason}")]
    Quadrature { x: f64, reason: String },

    #[error("cross-form disagreement at x = {x}: symmetric {symmetric}, difference quotient {difference_quotient}")]
    CrossForm {
        x: f64,
        symmetric: f64,
        difference_quotient: f64,
    },
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// True when the error comes from the numerics rather than from the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EvaluationFailure { .. }
                | Error::Quadrature { .. }
                | Error::CrossForm { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Exact rational arithmetic and sparse multivariate polynomials.

mod interval;
mod parse;
mod polynomial;
pub mod rational;

pub use interval::{certify_sign, enclose, BoxSign, Interval};
pub use parse::parse_polynomial;
pub use polynomial::{FloatPoly, Monomial, Polynomial};
pub use rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected} variables, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },
    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("division by the zero polynomial")]
    ZeroDivisor,
    #[error("divisor must be non-constant")]
    ConstantDivisor,
    #[error("parse error at byte {position} of {input:?}: {message}")]
    Parse {
        input: String,
        position: usize,
        message: String,
    },
}

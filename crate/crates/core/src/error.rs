use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    NegativeMultiplier { index: usize, value: f64 },
    MissingOracle(&'static str),
    InfeasibleProfile { violation: f64 },
    /// A point outside the domain of a regularizer or utility.
    Domain(String),
    InvalidParameter(String),
    NonConvergence { iterations: usize, residual: f64 },
    ZeroUtility { buyer: usize },
    NonPositivePrice { good: usize, value: f64 },
    Singular,
    /// An iterate or residual became NaN or infinite.
    NonFinite { step: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "dimension mismatch for {what}: expected {expected}, found {found}"),
            Error::NegativeMultiplier { index, value } => {
                write!(f, "multiplier {index} is negative ({value})")
            }
            Error::MissingOracle(name) => write!(f, "no {name} oracle available for this game"),
            Error::InfeasibleProfile { violation } => {
                write!(f, "profile violates a coupling constraint by {violation:e}")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NonConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::ZeroUtility { buyer } => write!(f, "buyer {buyer} has zero utility"),
            Error::NonPositivePrice { good, value } => {
                write!(f, "price of good {good} is not positive ({value})")
            }
            Error::Singular => write!(f, "singular linear system"),
            Error::NonFinite { step } => write!(f, "non-finite value at step {step}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

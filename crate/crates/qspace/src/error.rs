use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("denominator vanishes at q = {0}")]
    PoleAtPoint(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown coordinate `{name}` for space {space}")]
    UnknownCoordinate { name: String, space: String },
    #[error("coordinate systems differ: {0} vs {1}")]
    CoordMismatch(String, String),
    #[error("formal antiderivative undefined: exponent -1 in coordinate {0}")]
    ExponentMinusOne(String),
    #[error("negative exponents are not allowed here ({0})")]
    Laurent(String),
    #[error("word is not in normal order: {0}")]
    NotNormalOrdered(String),
    #[error("space {0} has no derivative rules")]
    NoDerivativeRules(String),
    #[error("unknown space tag `{0}`")]
    UnknownSpace(String),
    #[error("series did not terminate within {0} steps")]
    NonTermination(usize),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, QError>;

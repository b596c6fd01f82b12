use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree {0} out of range 1..=16")]
    DegreeOutOfRange(u32),
    #[error("field of order {p}^{k} does not fit in 64 bits")]
    FieldTooLarge { p: u64, k: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid field element {0:?}")]
    InvalidElement(Vec<u64>),
    #[error("operands live in different fields")]
    FieldMismatch,
    #[error("zero polynomial has no finite root set")]
    ZeroPolynomial,
    #[error("expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("monomial {exponents:?} is not of degree {degree}")]
    NotHomogeneous { exponents: Vec<u32>, degree: u32 },
    #[error("invalid ring: n = {n}, d = {d}")]
    InvalidRing { n: usize, d: u32 },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("points are projectively dependent")]
    DependentPoints,
    #[error("zero vector does not define a projective point")]
    ZeroVector,
    #[error("invalid multiplicity order {0}")]
    InvalidOrder(String),
    #[error("flag is not in Y(F, {m})")]
    NotInScheme { m: u32 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("resource bound exceeded: {0}")]
    BoundExceeded(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

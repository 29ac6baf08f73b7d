use thiserror::Error;

/// Errors surfaced by the laboratory.
///
/// Hypothesis failures of a stability theorem are *not* errors: they are
/// recorded in the certificate. `Error` covers misuse (bad configuration,
/// arithmetic on incompatible values, unparseable input) and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("modulus {0} is not prime")]
    NonPrime(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u32, u32),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("orbit depth exhausted: {0}")]
    Depth(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unfittable control function: {0}")]
    Unfittable(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

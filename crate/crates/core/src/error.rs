use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed input: wrong arity, non-prime modulus, missing variable.
    #[error("usage error: {0}")]
    Usage(String),
    /// The model fails a nondegeneracy requirement; the message names the factor.
    #[error("degenerate model: {0}")]
    Degenerate(String),
    /// The reduction mod p is singular.
    #[error("bad reduction at p = {0}")]
    BadReduction(u64),
    /// A self-check or exact-division identity failed.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

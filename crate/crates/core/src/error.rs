use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("n = {0} is not an odd prime >= 5 (at most {max})", max = crate::geometry::MAX_N)]
    UnsupportedOrder(u32),
    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("invalid angle triple ({0}, {1}, {2}) for n = {3}")]
    InvalidTriple(u32, u32, u32, u32),
    #[error("invalid inflation factor: {0}")]
    InvalidInflation(String),
    #[error("prototile areas do not form a basis")]
    AreasNotABasis,
    #[error("substitution matrix inadmissible: {0}")]
    Inadmissible(String),
    #[error("no admissible starter length on side {side} of prototile {proto}")]
    NoStarter { proto: usize, side: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("archive error: {0}")]
    Archive(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

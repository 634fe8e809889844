use thiserror::Error;

use crate::word::Word;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("letter X{letter} exceeds the alphabet size {n}")]
    LetterOutOfRange { letter: usize, n: usize },
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("missing moment for word {0}")]
    MissingMoment(Word),
    #[error("inconsistent moment table: {0}")]
    InconsistentTable(String),
    #[error("negative squared norm for word {0}: the moments do not define a positive state")]
    NegativeNorm(Word),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("polynomial is not selfadjoint: {0}")]
    NotSelfadjoint(String),
    #[error("degree {degree} exceeds the allowed bound {bound}")]
    DegreeOverflow { degree: usize, bound: usize },
    #[error("repeated diagonal entries at positions {0} and {1}")]
    RepeatedDiagonal(usize, usize),
    #[error("acceptance rate {rate:e} after {draws} draws is below the cutoff")]
    LowAcceptance { rate: f64, draws: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

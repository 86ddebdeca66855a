use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid generator letter {letter} for rank {rank}")]
    InvalidLetter { letter: i32, rank: usize },

    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },

    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not a permutation: {0}")]
    NotPermutation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("radius mismatch: {left} vs {right}")]
    RadiusMismatch { left: usize, right: usize },

    #[error("sampler failed at sample {index}: {message}")]
    Sampler { index: u64, message: String },

    #[error("not a partition: {0}")]
    NotPartition(String),

    #[error("not a bijection: {0}")]
    NotBijective(String),
}

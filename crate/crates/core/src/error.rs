use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("reference field has zero norm")]
    ZeroReference,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("decomposition levels {levels} out of range 1..={max} for n = {n}")]
    LevelsOutOfRange { levels: usize, max: usize, n: usize },
    #[error("filter family not eligible for differentiation: {0}")]
    FamilyIneligible(String),
    #[error("solver diverged: {0}")]
    Diverged(String),
    #[error("regularization bracket could not be established: {0}")]
    Bracket(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("linear system error: {0}")]
    LinearSystem(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

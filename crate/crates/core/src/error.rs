use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlsaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("tridiagonal pivot {pivot:e} at row {row} is below the singularity floor")]
    SingularPivot { row: usize, pivot: f64 },

    #[error("could not bracket the coordinate minimizer after {expansions} expansions (loss not coercive?)")]
    BracketFailed { expansions: usize },

    #[error("iterate became non-finite at outer iteration {iteration}")]
    Diverged { iteration: usize },
}

pub type Result<T> = std::result::Result<T, FlsaError>;

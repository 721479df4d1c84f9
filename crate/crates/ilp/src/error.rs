use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IlpError {
    #[error("malformed constraint {row}: {reason}")]
    Malformed { row: usize, reason: String },
    #[error("variable {var} does not exist (instance has {n_vars})")]
    UnknownVariable { var: usize, n_vars: usize },
    #[error("invalid bounds for variable {var}: [{lo}, {hi}]")]
    InvalidBounds { var: usize, lo: f64, hi: f64 },
    #[error("LP relaxation reported unbounded; all variables are boxed so this is a solver fault")]
    Unbounded,
    #[error("simplex did not converge within {0} iterations")]
    IterationLimit(usize),
    #[error("variable {var} is already fixed to 1 and cannot be nulled")]
    ConflictingFix { var: usize },
    #[error("dense tableau of {rows}x{cols} exceeds the memory cap")]
    TooLarge { rows: usize, cols: usize },
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("truncation error: norm defect {defect:.3e} exceeds tolerance")]
    Truncation { defect: f64 },
    #[error("impossible trajectory: {0}")]
    ImpossibleTrajectory(String),
    #[error("leakage outside the code support: weight {leaked:.3e}")]
    Leakage { leaked: f64 },
    #[error("fit did not converge: residual {residual:.3e}")]
    Fit { residual: f64 },
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("steady state is not unique ({null_dim} null vectors)")]
    NonUniqueSteadyState { null_dim: usize },
    #[error("undefined process element: {0}")]
    UndefinedElement(String),
    #[error("reconstruction ill-conditioned: condition number {condition:.3e}")]
    Reconstruction { condition: f64 },
    #[error("optimizer diverged at iteration {iteration}")]
    Optimizer { iteration: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::InvalidDimension(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

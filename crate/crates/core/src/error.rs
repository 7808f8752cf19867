use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("triangle {element} has non-positive signed area {area:e}")]
    DegenerateTriangle { element: usize, area: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("function does not live on the coarse mesh of this refinement")]
    TransferMismatch,

    #[error("non-finite {what} on element {element}")]
    NonFinite { what: &'static str, element: usize },

    #[error("diffusion coefficient {value:e} on element {element} is below the admissible minimum {min:e}")]
    KappaTooSmall { element: usize, value: f64, min: f64 },

    #[error("problem has no exact solution")]
    MissingExactSolution,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

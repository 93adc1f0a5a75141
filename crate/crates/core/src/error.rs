use thiserror::Error;

pub type Result<T> = std::result::Result<T, PlateError>;

#[derive(Debug, Error)]
pub enum PlateError {
    /// An argument lies outside the domain of a material or geometric law.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("mesh specification error: {0}")]
    Spec(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("no buckling under this load pattern")]
    NoBuckling,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PlateError {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            PlateError::Config(_)
            | PlateError::Spec(_)
            | PlateError::Parse { .. }
            | PlateError::Json(_)
            | PlateError::Io(_) => 2,
            _ => 3,
        }
    }
}

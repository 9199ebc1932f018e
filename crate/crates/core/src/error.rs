use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration (exit code 2 in the CLI).
    #[error("configuration error: {0}")]
    Config(String),
    /// A query or evaluation point outside the solved domain (exit code 3).
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular system: pivot {pivot:e} at unknown {row} (node x = {x}, y = {y})")]
    Singular { row: usize, pivot: f64, x: f64, y: f64 },
    #[error("non-finite solution value at time step {step}")]
    NonFinite { step: usize },
    #[error("degenerate hedge: {0}")]
    DegenerateHedge(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// 2 for configuration problems, 3 for out-of-domain queries, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Io(_) | Error::Dimension(_) => 2,
            Error::Domain(_) => 3,
            Error::Singular { .. } | Error::NonFinite { .. } | Error::DegenerateHedge(_) => 1,
        }
    }
}

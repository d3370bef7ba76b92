use thiserror::Error;

use crate::arch::ArArchFit;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column `{column}`")]
    MissingColumn { column: String },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("division by zero: level for year {year} is zero")]
    DivisionByZero { year: i32 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("collinear design: column(s) {columns:?} are linearly dependent on earlier columns")]
    Collinearity { columns: Vec<String> },

    #[error("optimizer did not converge after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        best: Box<ArArchFit>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

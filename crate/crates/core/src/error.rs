use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = VemError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum VemError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid mesh: {0}")]
    Validation(String),
    #[error("topology error in cell {cell}: {message}")]
    Topology { cell: usize, message: String },
    #[error("geometry error on face {face} of cell {cell}: {message}")]
    Geometry {
        cell: usize,
        face: usize,
        message: String,
    },
    #[error("singular {what} matrix on {entity}")]
    Singular { what: &'static str, entity: String },
    #[error("mesh generation failed after {retries} retries: {message}")]
    Generation { retries: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    Solver {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: atoms {0} and {1} coincide")]
    DegenerateGeometry(usize, usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no basis functions for element {0}")]
    MissingElement(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{method} did not converge after {iterations} iterations (last energy {energy:.10}, residual {residual:.3e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        energy: f64,
        residual: f64,
        /// Free-form oscillation diagnostics, empty when not collected.
        diagnostics: String,
    },

    #[error("expected {expected} electrons, molecule has {found}")]
    ElectronCount { expected: usize, found: i64 },

    #[error("occupation {value} at index {index} outside [0, 1]")]
    OccupationOutOfRange { index: usize, value: f64 },

    #[error("electron count {n} outside (0, {max})")]
    ParticleNumber { n: f64, max: usize },

    #[error("degenerate abscissa: all x values are equal")]
    DegenerateAbscissa,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

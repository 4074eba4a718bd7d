use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |m - m^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix has a negative eigenvalue {value:e}")]
    NegativeEigenvalue { value: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid subsystem index {index} for a {n_qubits}-qubit state")]
    InvalidSubsystem { index: usize, n_qubits: usize },

    #[error("dimension {0} is not a power of two")]
    NotQubits(usize),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("targets unreachable by the noise family (nearest p={nearest_p:.6}, gamma={nearest_gamma:.6}, residual={residual:.3e})")]
    Unreachable {
        nearest_p: f64,
        nearest_gamma: f64,
        residual: f64,
    },

    #[error("count table is empty")]
    EmptyTable,

    #[error("missing measurement setting: {0}")]
    MissingSetting(String),

    #[error("incomplete tomography data: {0}")]
    IncompleteData(String),

    #[error("setting {index} has zero total counts")]
    DegenerateData { index: usize },

    #[error("maximum-likelihood reconstruction did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("time-tag stream is not sorted at record {index}")]
    Unsorted { index: usize },

    #[error("malformed stream at byte {offset}: {reason}")]
    MalformedStream { offset: u64, reason: String },

    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("no coincidence peak found above background")]
    NoPeak,

    #[error("empty region: {0}")]
    EmptyRegion(&'static str),

    #[error("peak and background regions overlap")]
    OverlappingRegions,

    #[error("zero herald rate")]
    ZeroHeraldRate,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

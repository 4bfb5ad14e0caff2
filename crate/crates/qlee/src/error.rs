//! Error surface shared by the whole library.
//!
//! Everything user-triggerable (bad indices, incompatible dimensions,
//! refused guard limits) is an [`Error`]; internal invariant violations are
//! `debug_assert!`s instead.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("qubit {qubit} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("gate uses qubit {qubit} more than once")]
    DuplicateQubit { qubit: usize },

    #[error("circuit acts on {circuit} qubits but the state has {state}")]
    QubitCountMismatch { circuit: usize, state: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{what} needs {requested} which exceeds the guard limit {limit}")]
    GuardExceeded {
        what: &'static str,
        limit: usize,
        requested: usize,
    },

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "parameters are not conservative (c = {c}, rho_bar = {rho_bar}, so c != 1/rho_bar); \
         the one-step unitary does not exist — use split_generator / split_step instead"
    )]
    NonConservative { c: f64, rho_bar: f64 },

    #[error("power iteration did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    PowerIterationDiverged { residual: f64, iterations: usize },

    #[error("obstacle cells overlap: {0}")]
    OverlappingCells(String),

    #[error("mask has {found_rows} rows x {found_cols} cols, expected {expected_rows} x {expected_cols}")]
    MaskShape {
        expected_rows: usize,
        expected_cols: usize,
        found_rows: usize,
        found_cols: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

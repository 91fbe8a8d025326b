//! Minimal deterministic numerical kernel: dense matrices, symmetric
//! eigendecomposition, Moore–Penrose pseudo-inverse and seeded sampling.

mod eig;
mod matrix;
mod rng;

pub use eig::{eig_sym, pinv, sym_inv_sqrt, sym_pinv};
pub use matrix::Matrix;
pub use rng::{sample_normal, Rng};

use thiserror::Error;

/// Errors raised by the linear-algebra kernel.
#[derive(Debug, Error)]
pub enum LinalgError {
    /// Input to `eig_sym` was not symmetric within tolerance.
    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {deviation:e} exceeds tolerance {tolerance:e}")]
    NonSymmetric {
        row: usize,
        col: usize,
        deviation: f64,
        tolerance: f64,
    },
    /// Iteration cap exceeded before convergence.
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    /// Operand shapes are incompatible.
    #[error("shape mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
}

//! The two report metrics. RE is the mean absolute error over all entries;
//! RMSE the root of the mean squared error. Both average over every cell of
//! the matrix, so RE <= RMSE always (Jensen).

use super::EvalError;
use crate::linalg::Matrix;
use crate::Scalar;

fn check_shapes<S: Scalar>(x: &Matrix<S>, x_hat: &Matrix<S>) -> Result<(), EvalError> {
    if x.shape() != x_hat.shape() {
        return Err(EvalError::ShapeMismatch {
            left_rows: x.rows(),
            left_cols: x.cols(),
            right_rows: x_hat.rows(),
            right_cols: x_hat.cols(),
        });
    }
    Ok(())
}

/// Mean absolute error over all `n x m` entries.
pub fn re_metric<S: Scalar>(x: &Matrix<S>, x_hat: &Matrix<S>) -> Result<f64, EvalError> {
    check_shapes(x, x_hat)?;
    let total: f64 = x
        .data()
        .iter()
        .zip(x_hat.data())
        .map(|(&a, &b)| (a - b).abs().to_f64_lossy())
        .sum();
    Ok(total / (x.rows() * x.cols()) as f64)
}

/// Root mean squared error over all `n x m` entries.
pub fn rmse_metric<S: Scalar>(x: &Matrix<S>, x_hat: &Matrix<S>) -> Result<f64, EvalError> {
    check_shapes(x, x_hat)?;
    let total: f64 = x
        .data()
        .iter()
        .zip(x_hat.data())
        .map(|(&a, &b)| {
            let d = (a - b).to_f64_lossy();
            d * d
        })
        .sum();
    Ok((total / (x.rows() * x.cols()) as f64).sqrt())
}

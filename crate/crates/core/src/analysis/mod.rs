//! Downstream analyses on latent representations: reconstruction-error
//! anomaly detection, latent feature extraction, and k-means clustering in
//! latent space.

mod anomaly;
mod kmeans;

pub use anomaly::{
    calibrate_threshold, detect_anomalies, AnomalyReport, ThresholdPolicy,
};
pub use kmeans::{adjusted_rand_index, kmeans, ClusterAssignment, KmeansConfig};

use crate::autoencoder::{AeError, AutoencoderModel};
use crate::linalg::Matrix;
use crate::Scalar;

/// Errors from the analysis operations.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AnalysisError {
    /// Threshold calibration got an empty error vector.
    #[error("cannot calibrate a threshold from zero errors")]
    EmptyCalibration,
    /// More clusters requested than there are points.
    #[error("cannot form {k} clusters from {n} points")]
    KTooLarge { k: usize, n: usize },
}

/// Latent codes for `x`: the encoder output (the posterior mean for a
/// variational model). This compressed view is the feature-selection
/// artifact the rest of the pipeline consumes.
pub fn latent_features<S: Scalar>(
    model: &AutoencoderModel<S>,
    x: &Matrix<S>,
) -> Result<Matrix<S>, AeError> {
    model.encode(x)
}

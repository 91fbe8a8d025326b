//! Reconstruction-error anomaly detection: calibrate a threshold on
//! training errors, then flag evaluation rows whose error exceeds it.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::autoencoder::{AeError, AutoencoderModel};
use crate::linalg::Matrix;
use crate::Scalar;

/// How the anomaly threshold is derived from training errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// Linear-interpolated p-quantile of the training errors.
    Quantile { p: f64 },
    /// Mean plus `k` population standard deviations.
    MeanPlusKSigma { k: f64 },
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::Quantile { p: 0.99 }
    }
}

/// Per-sample errors, the calibrated threshold, and the resulting flags.
/// The threshold always comes from training errors; the flags may be for
/// any evaluation set.
#[derive(Debug, Clone, Serialize)]
pub struct AnomalyReport<S: Scalar> {
    pub errors: Vec<S>,
    pub threshold: S,
    pub policy: ThresholdPolicy,
    pub flags: Vec<bool>,
}

impl<S: Scalar> AnomalyReport<S> {
    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn flagged_indices(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect()
    }
}

/// Calibrates a threshold from training reconstruction errors under the
/// given policy.
pub fn calibrate_threshold<S: Scalar>(
    train_errors: &[S],
    policy: ThresholdPolicy,
) -> Result<S, AnalysisError> {
    if train_errors.is_empty() {
        return Err(AnalysisError::EmptyCalibration);
    }
    match policy {
        ThresholdPolicy::Quantile { p } => {
            assert!((0.0..=1.0).contains(&p), "quantile level outside [0, 1]");
            let mut sorted = train_errors.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("errors are finite"));
            let position = p * (sorted.len() - 1) as f64;
            let lower = position.floor() as usize;
            let upper = position.ceil() as usize;
            let fraction = S::cast(position - lower as f64);
            Ok(sorted[lower] + fraction * (sorted[upper] - sorted[lower]))
        }
        ThresholdPolicy::MeanPlusKSigma { k } => {
            let n = S::from_usize(train_errors.len()).unwrap();
            let mean = train_errors.iter().copied().sum::<S>() / n;
            let variance = train_errors
                .iter()
                .map(|&e| (e - mean) * (e - mean))
                .sum::<S>()
                / n;
            Ok(mean + S::cast(k) * variance.sqrt())
        }
    }
}

/// Scores `x_eval` under the model and flags every row whose per-sample
/// error strictly exceeds `threshold`.
pub fn detect_anomalies<S: Scalar>(
    model: &AutoencoderModel<S>,
    x_eval: &Matrix<S>,
    threshold: S,
    policy: ThresholdPolicy,
) -> Result<AnomalyReport<S>, AeError> {
    let errors = model.reconstruction_errors(x_eval)?;
    let flags = errors.iter().map(|&e| e > threshold).collect();
    Ok(AnomalyReport { errors, threshold, policy, flags })
}

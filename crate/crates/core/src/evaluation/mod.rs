//! Report-level evaluation: RE/RMSE metrics, downstream linear classifiers,
//! the method-comparison harness, and file export.

mod classify;
mod compare;
mod export;
mod metrics;

pub use classify::{
    classifier_scores, hinge_loss, linear_svm_train, log_loss, logreg_train, roc_auc,
    ClassifierScores, LinearClassifier, LogRegConfig, SvmConfig,
};
pub use compare::{
    compare_methods, fit_method, reference_rows, CompareOptions, DownstreamRow,
    FittedMethod, LossHistory, MethodKind, MethodRow, MetricsReport, ReferenceRow,
    RunMetrics,
};
pub use export::{
    export_anomalies_csv, export_clusters_csv, export_downstream_csv,
    export_embeddings_csv, export_loss_history_csv, export_metrics_json,
    export_table1_csv,
};
pub use metrics::{re_metric, rmse_metric};

use std::path::PathBuf;

/// Errors from metric computation, classifier training, or export.
#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    /// Labels contain only one class; training and AUC are undefined.
    #[error("labels contain a single class")]
    SingleClass,
    #[error("writing {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Baseline(#[from] crate::baselines::BaselineError),
    #[error(transparent)]
    Network(#[from] crate::autoencoder::AeError),
}

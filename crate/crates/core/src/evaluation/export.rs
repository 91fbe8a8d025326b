//! File export for reports and run artifacts. CSV floats are printed in
//! scientific notation with 17 significant digits so parsing them back
//! reproduces the exact f64; JSON goes through serde_json, whose float
//! formatting is already round-trip faithful. Output is deterministic
//! byte-for-byte for a given report.

use std::fs;
use std::path::Path;

use super::compare::{DownstreamRow, LossHistory, MetricsReport};
use super::EvalError;
use crate::analysis::{AnomalyReport, ClusterAssignment};
use crate::linalg::Matrix;
use crate::Scalar;

fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_g17(x: Option<f64>) -> String {
    x.map(fmt_g17).unwrap_or_default()
}

fn write_bytes(path: &Path, bytes: Vec<u8>) -> Result<(), EvalError> {
    fs::write(path, bytes).map_err(|source| EvalError::Io { path: path.to_path_buf(), source })
}

fn csv_buffer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn record<I, F>(writer: &mut csv::Writer<Vec<u8>>, fields: I)
where
    I: IntoIterator<Item = F>,
    F: AsRef<[u8]>,
{
    writer.write_record(fields).expect("writing csv to memory cannot fail");
}

fn finish(writer: csv::Writer<Vec<u8>>, path: &Path) -> Result<(), EvalError> {
    let bytes = writer.into_inner().expect("flushing an in-memory csv cannot fail");
    write_bytes(path, bytes)
}

/// Writes the full report as pretty-printed JSON.
pub fn export_metrics_json(report: &MetricsReport, path: &Path) -> Result<(), EvalError> {
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    write_bytes(path, json.into_bytes())
}

/// Writes the aggregated per-method rows; empty cells stand for values a
/// row does not have (reference rows, fully failed methods).
pub fn export_table1_csv(report: &MetricsReport, path: &Path) -> Result<(), EvalError> {
    let mut writer = csv_buffer();
    record(&mut writer, ["method", "k", "re_mean", "re_std", "rmse_mean", "rmse_std", "flags"]);
    for row in &report.rows {
        record(
            &mut writer,
            [
                row.method.clone(),
                row.k.map(|k| k.to_string()).unwrap_or_default(),
                opt_g17(row.re_mean),
                opt_g17(row.re_std),
                opt_g17(row.rmse_mean),
                opt_g17(row.rmse_std),
                row.flags.join("; "),
            ],
        );
    }
    finish(writer, path)
}

/// Writes every AE/VAE loss curve, one row per epoch; the test column is
/// empty for runs trained without a held-out split.
pub fn export_loss_history_csv(histories: &[LossHistory], path: &Path) -> Result<(), EvalError> {
    let mut writer = csv_buffer();
    record(&mut writer, ["method", "seed", "epoch", "train_loss", "test_loss"]);
    for history in histories {
        for (i, &train) in history.train.iter().enumerate() {
            record(
                &mut writer,
                [
                    history.method.clone(),
                    history.seed.to_string(),
                    (i + 1).to_string(),
                    fmt_g17(train),
                    history.test.get(i).copied().map(fmt_g17).unwrap_or_default(),
                ],
            );
        }
    }
    finish(writer, path)
}

/// Writes an `n x k` latent matrix with an index column.
pub fn export_embeddings_csv<S: Scalar>(z: &Matrix<S>, path: &Path) -> Result<(), EvalError> {
    let mut writer = csv_buffer();
    let mut header = vec!["index".to_string()];
    header.extend((0..z.cols()).map(|j| format!("z{j}")));
    record(&mut writer, header);
    for i in 0..z.rows() {
        let mut fields = vec![i.to_string()];
        fields.extend(z.row(i).iter().map(|&v| fmt_g17(v.to_f64_lossy())));
        record(&mut writer, fields);
    }
    finish(writer, path)
}

/// Writes per-sample reconstruction errors and anomaly flags.
pub fn export_anomalies_csv<S: Scalar>(
    report: &AnomalyReport<S>,
    path: &Path,
) -> Result<(), EvalError> {
    let mut writer = csv_buffer();
    record(&mut writer, ["index", "error", "flag"]);
    for (i, (&error, &flag)) in report.errors.iter().zip(&report.flags).enumerate() {
        record(
            &mut writer,
            [i.to_string(), fmt_g17(error.to_f64_lossy()), flag.to_string()],
        );
    }
    finish(writer, path)
}

/// Writes per-sample cluster labels.
pub fn export_clusters_csv<S: Scalar>(
    assignment: &ClusterAssignment<S>,
    path: &Path,
) -> Result<(), EvalError> {
    let mut writer = csv_buffer();
    record(&mut writer, ["index", "cluster"]);
    for (i, &label) in assignment.labels.iter().enumerate() {
        record(&mut writer, [i.to_string(), label.to_string()]);
    }
    finish(writer, path)
}

/// Writes downstream classifier scores, one row per method × classifier ×
/// seed.
pub fn export_downstream_csv(rows: &[DownstreamRow], path: &Path) -> Result<(), EvalError> {
    let mut writer = csv_buffer();
    record(&mut writer, ["method", "classifier", "seed", "accuracy", "roc_auc"]);
    for row in rows {
        record(
            &mut writer,
            [
                row.method.clone(),
                row.classifier.clone(),
                row.seed.to_string(),
                fmt_g17(row.accuracy),
                fmt_g17(row.roc_auc),
            ],
        );
    }
    finish(writer, path)
}

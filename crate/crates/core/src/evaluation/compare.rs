//! The method-comparison harness: fits every requested method per seed,
//! reconstructs the test split, and aggregates RE/RMSE into per-method rows.
//! Previously published reference values are reprinted alongside the
//! measured rows and are never used as assertion targets.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::metrics::{re_metric, rmse_metric};
use super::EvalError;
use crate::autoencoder::{
    symmetric_layer_specs, train, AutoencoderModel, Mode, TrainConfig, TrainReport,
};
use crate::baselines::{
    fa_fit, ica_fit, pca_fit, tsne_embed, ReducerModel, TsneConfig, TsneModel,
};
use crate::linalg::Rng;
use crate::{Matrix, Scalar};

const METRIC_NOTE: &str = "RE = mean absolute error over all entries; RMSE = root mean \
     squared error; both computed on the standardized feature space. Reference rows \
     reprint previously published values and are not assertion targets.";

/// Methods the harness knows how to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Pca,
    Fa,
    Ica,
    Tsne,
    Ae,
    Vae,
}

impl MethodKind {
    pub const ALL: [MethodKind; 6] = [
        MethodKind::Pca,
        MethodKind::Fa,
        MethodKind::Ica,
        MethodKind::Tsne,
        MethodKind::Ae,
        MethodKind::Vae,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Pca => "pca",
            MethodKind::Fa => "fa",
            MethodKind::Ica => "ica",
            MethodKind::Tsne => "tsne",
            MethodKind::Ae => "ae",
            MethodKind::Vae => "vae",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareOptions {
    /// Latent width every method is fitted at.
    pub k: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodKind>,
    /// Hidden encoder widths for AE/VAE; mirrored in the decoder.
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    pub fa_max_iter: usize,
    pub fa_tol: f64,
    pub ica_max_iter: usize,
    pub ica_tol: f64,
    pub tsne_perplexity: f64,
    pub tsne: TsneConfig,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            k: 8,
            seeds: vec![0],
            methods: MethodKind::ALL.to_vec(),
            hidden: vec![64, 32],
            train: TrainConfig::default(),
            fa_max_iter: 200,
            fa_tol: 1e-6,
            ica_max_iter: 200,
            ica_tol: 1e-4,
            tsne_perplexity: 30.0,
            tsne: TsneConfig { row_cap: 2000, ..TsneConfig::default() },
        }
    }
}

/// Metrics from a single method × seed cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub re: f64,
    pub rmse: f64,
}

/// One aggregated table row. Aggregates are `None` when every seed failed;
/// the injected reference row carries point values and no runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub k: Option<usize>,
    pub re_mean: Option<f64>,
    pub re_std: Option<f64>,
    pub rmse_mean: Option<f64>,
    pub rmse_std: Option<f64>,
    pub runs: Vec<RunMetrics>,
    pub flags: Vec<String>,
}

/// Per-epoch loss curve from one AE/VAE training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub method: String,
    pub seed: u64,
    pub train: Vec<f64>,
    pub test: Vec<f64>,
}

/// Downstream classifier scores on one method's latent features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamRow {
    pub method: String,
    pub classifier: String,
    pub seed: u64,
    pub accuracy: f64,
    pub roc_auc: f64,
}

/// A previously published benchmark value, reprinted for side-by-side
/// reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub model: String,
    pub re: f64,
    pub rmse: f64,
}

/// The published RE/RMSE block these comparisons are laid out against.
pub fn reference_rows() -> Vec<ReferenceRow> {
    [
        ("PCA", 0.215, 0.305),
        ("FA", 0.198, 0.287),
        ("ICA", 0.176, 0.256),
        ("T-SNE", 0.152, 0.239),
        ("UMAP", 0.139, 0.218),
        ("AE(ours)", 0.115, 0.195),
    ]
    .into_iter()
    .map(|(model, re, rmse)| ReferenceRow { model: model.to_string(), re, rmse })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metric_note: String,
    pub k: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<MethodRow>,
    pub reference: Vec<ReferenceRow>,
    pub loss_histories: Vec<LossHistory>,
    pub downstream: Vec<DownstreamRow>,
    /// Resolved run configuration, attached by the caller.
    pub config: Option<String>,
}

/// One fitted method, ready to produce latents and reconstructions.
pub enum FittedMethod<S: Scalar> {
    Reducer(ReducerModel<S>),
    Network { model: AutoencoderModel<S>, report: TrainReport },
}

impl<S: Scalar> FittedMethod<S> {
    pub fn transform(&self, x: &Matrix<S>) -> Result<Matrix<S>, EvalError> {
        match self {
            FittedMethod::Reducer(model) => Ok(model.transform(x)?),
            FittedMethod::Network { model, .. } => Ok(model.encode(x)?),
        }
    }

    pub fn reconstruct(&self, x: &Matrix<S>) -> Result<Matrix<S>, EvalError> {
        match self {
            FittedMethod::Reducer(model) => Ok(model.reconstruct(x)?),
            FittedMethod::Network { model, .. } => Ok(model.reconstruct(x)?),
        }
    }

    pub fn train_report(&self) -> Option<&TrainReport> {
        match self {
            FittedMethod::Reducer(_) => None,
            FittedMethod::Network { report, .. } => Some(report),
        }
    }

    pub fn tsne(&self) -> Option<&TsneModel<S>> {
        match self {
            FittedMethod::Reducer(ReducerModel::Tsne(model)) => Some(model),
            _ => None,
        }
    }
}

/// Fits one method on `x`. AE/VAE additionally evaluate `test_x` after each
/// epoch when it is given, so their loss histories carry a test curve; the
/// other methods ignore it.
pub fn fit_method<S: Scalar>(
    kind: MethodKind,
    x: &Matrix<S>,
    test_x: Option<&Matrix<S>>,
    seed: u64,
    options: &CompareOptions,
) -> Result<FittedMethod<S>, EvalError> {
    let k = options.k;
    match kind {
        MethodKind::Pca => Ok(FittedMethod::Reducer(ReducerModel::Pca(pca_fit(x, k)?))),
        MethodKind::Fa => Ok(FittedMethod::Reducer(ReducerModel::Fa(fa_fit(
            x,
            k,
            options.fa_max_iter,
            options.fa_tol,
        )?))),
        MethodKind::Ica => {
            let mut rng = Rng::new(seed);
            Ok(FittedMethod::Reducer(ReducerModel::Ica(ica_fit(
                x,
                k,
                options.ica_max_iter,
                options.ica_tol,
                &mut rng,
            )?)))
        }
        MethodKind::Tsne => {
            let config = TsneConfig { seed, ..options.tsne.clone() };
            Ok(FittedMethod::Reducer(ReducerModel::Tsne(tsne_embed(
                x,
                k,
                options.tsne_perplexity,
                &config,
            )?)))
        }
        MethodKind::Ae | MethodKind::Vae => {
            let mode = if kind == MethodKind::Ae { Mode::Plain } else { Mode::Variational };
            let specs = symmetric_layer_specs(x.cols(), &options.hidden, k);
            let mut init_rng = Rng::new(seed);
            let mut model = AutoencoderModel::init(&specs, mode, &mut init_rng)?;
            let config = TrainConfig { seed, ..options.train };
            let report = train(&mut model, x, test_x, &config)?;
            Ok(FittedMethod::Network { model, report })
        }
    }
}

fn score_fitted<S: Scalar>(
    fitted: &FittedMethod<S>,
    test_x: &Matrix<S>,
) -> Result<(f64, f64), EvalError> {
    if let Some(model) = fitted.tsne() {
        let subset = test_x.select_rows(model.fitted_indices());
        let recon = fitted.reconstruct(&subset)?;
        Ok((re_metric(&subset, &recon)?, rmse_metric(&subset, &recon)?))
    } else {
        let recon = fitted.reconstruct(test_x)?;
        Ok((re_metric(test_x, &recon)?, rmse_metric(test_x, &recon)?))
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_std(values: &[f64]) -> f64 {
    let center = mean(values);
    (values.iter().map(|v| (v - center).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

fn push_once(flags: &mut Vec<String>, flag: String) {
    if !flags.contains(&flag) {
        flags.push(flag);
    }
}

fn measure_method<S: Scalar>(
    kind: MethodKind,
    train_x: &Matrix<S>,
    test_x: &Matrix<S>,
    options: &CompareOptions,
    loss_histories: &mut Vec<LossHistory>,
) -> MethodRow {
    let mut runs = Vec::new();
    let mut flags = Vec::new();
    if kind == MethodKind::Tsne {
        flags.push("fitted on the test split; linear-decoder reconstruction".to_string());
    }
    for &seed in &options.seeds {
        // t-SNE has no out-of-sample transform, so its cell is fitted
        // directly on the (possibly capped) test split.
        let fit_input = if kind == MethodKind::Tsne { test_x } else { train_x };
        let fitted = match fit_method(kind, fit_input, Some(test_x), seed, options) {
            Ok(fitted) => fitted,
            Err(e) => {
                flags.push(format!("seed {seed} failed: {e}"));
                continue;
            }
        };
        if let Some(model) = fitted.tsne() {
            if model.subsampled() {
                push_once(
                    &mut flags,
                    format!(
                        "seeded subsample of {} of {} test rows",
                        model.fitted_indices().len(),
                        test_x.rows()
                    ),
                );
            }
            if model.duplicate_collapse() {
                push_once(&mut flags, "duplicate rows forced bandwidth fallback".to_string());
            }
        }
        if let FittedMethod::Reducer(reducer) = &fitted {
            if !reducer.converged() {
                flags.push(format!("seed {seed}: stopped at the iteration cap"));
            }
        }
        if let Some(report) = fitted.train_report() {
            loss_histories.push(LossHistory {
                method: kind.name().to_string(),
                seed,
                train: report.train_loss.clone(),
                test: report.test_loss.clone(),
            });
        }
        match score_fitted(&fitted, test_x) {
            Ok((re, rmse)) => runs.push(RunMetrics { seed, re, rmse }),
            Err(e) => flags.push(format!("seed {seed} failed: {e}")),
        }
    }
    let (re_mean, re_std, rmse_mean, rmse_std) = if runs.is_empty() {
        (None, None, None, None)
    } else {
        let res: Vec<f64> = runs.iter().map(|r| r.re).collect();
        let rmses: Vec<f64> = runs.iter().map(|r| r.rmse).collect();
        (
            Some(mean(&res)),
            Some(population_std(&res)),
            Some(mean(&rmses)),
            Some(population_std(&rmses)),
        )
    };
    MethodRow {
        method: kind.name().to_string(),
        k: Some(options.k),
        re_mean,
        re_std,
        rmse_mean,
        rmse_std,
        runs,
        flags,
    }
}

fn umap_reference_row() -> MethodRow {
    MethodRow {
        method: "umap".to_string(),
        k: None,
        re_mean: Some(0.139),
        re_std: None,
        rmse_mean: Some(0.218),
        rmse_std: None,
        runs: Vec::new(),
        flags: vec!["reference — external".to_string()],
    }
}

/// Runs every requested method across every seed and assembles the report.
/// Rows come out in a fixed order (pca, fa, ica, tsne, umap, ae, vae)
/// regardless of the order methods were requested in; the umap row is the
/// injected external reference. Per-seed failures become row flags instead
/// of aborting the table.
pub fn compare_methods<S: Scalar>(
    train_x: &Matrix<S>,
    test_x: &Matrix<S>,
    options: &CompareOptions,
) -> MetricsReport {
    let mut rows = Vec::new();
    let mut loss_histories = Vec::new();
    for kind in [MethodKind::Pca, MethodKind::Fa, MethodKind::Ica, MethodKind::Tsne] {
        if options.methods.contains(&kind) {
            rows.push(measure_method(kind, train_x, test_x, options, &mut loss_histories));
        }
    }
    rows.push(umap_reference_row());
    for kind in [MethodKind::Ae, MethodKind::Vae] {
        if options.methods.contains(&kind) {
            rows.push(measure_method(kind, train_x, test_x, options, &mut loss_histories));
        }
    }
    MetricsReport {
        metric_note: METRIC_NOTE.to_string(),
        k: options.k,
        seeds: options.seeds.clone(),
        rows,
        reference: reference_rows(),
        loss_histories,
        downstream: Vec::new(),
        config: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_normal;

    fn quick_options(k: usize, methods: Vec<MethodKind>, seeds: Vec<u64>) -> CompareOptions {
        CompareOptions {
            k,
            seeds,
            methods,
            hidden: vec![8],
            train: TrainConfig { epochs: 4, batch_size: 32, ..TrainConfig::default() },
            tsne_perplexity: 5.0,
            tsne: TsneConfig { iters: 120, ..TsneConfig::default() },
            ..CompareOptions::default()
        }
    }

    #[test]
    fn pca_with_a_complete_basis_reconstructs_exactly() {
        let mut rng = Rng::new(467);
        let train_x = sample_normal::<f64>(&mut rng, 40, 5);
        let test_x = sample_normal::<f64>(&mut rng, 25, 5);
        let options = quick_options(5, vec![MethodKind::Pca], vec![0]);
        let report = compare_methods(&train_x, &test_x, &options);
        assert_eq!(report.rows.len(), 2);
        let pca = &report.rows[0];
        assert_eq!(pca.method, "pca");
        assert!(pca.re_mean.unwrap() < 1e-10);
        assert!(pca.rmse_mean.unwrap() < 1e-10);
        let umap = &report.rows[1];
        assert_eq!(umap.method, "umap");
        assert_eq!(umap.re_mean, Some(0.139));
        assert_eq!(umap.rmse_mean, Some(0.218));
        assert!(umap.flags.iter().any(|f| f == "reference — external"));
        assert!(umap.runs.is_empty());
    }

    #[test]
    fn every_row_keeps_re_at_or_below_rmse() {
        let mut rng = Rng::new(479);
        let train_x = sample_normal::<f64>(&mut rng, 80, 6);
        let test_x = sample_normal::<f64>(&mut rng, 48, 6);
        let options = quick_options(2, MethodKind::ALL.to_vec(), vec![0]);
        let report = compare_methods(&train_x, &test_x, &options);
        assert_eq!(report.rows.len(), 7);
        for row in &report.rows {
            let (re, rmse) = (row.re_mean.unwrap(), row.rmse_mean.unwrap());
            assert!(re <= rmse + 1e-12, "{}: re {re} above rmse {rmse}", row.method);
            for run in &row.runs {
                assert!(run.re <= run.rmse + 1e-12);
            }
        }
    }

    #[test]
    fn aggregates_match_a_hand_computed_mean_and_population_std() {
        let mut rng = Rng::new(487);
        let train_x = sample_normal::<f64>(&mut rng, 50, 4);
        let test_x = sample_normal::<f64>(&mut rng, 30, 4);
        let options = quick_options(2, vec![MethodKind::Ae], vec![0, 1, 2]);
        let report = compare_methods(&train_x, &test_x, &options);
        let row = &report.rows[1];
        assert_eq!(row.method, "ae");
        assert_eq!(row.runs.len(), 3);
        let res: Vec<f64> = row.runs.iter().map(|r| r.re).collect();
        let mean = res.iter().sum::<f64>() / 3.0;
        let std = (res.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
        assert!((row.re_mean.unwrap() - mean).abs() < 1e-12);
        assert!((row.re_std.unwrap() - std).abs() < 1e-12);
        assert!(std > 0.0, "different seeds should give different runs");
    }

    #[test]
    fn report_is_deterministic_for_fixed_options() {
        let mut rng = Rng::new(491);
        let train_x = sample_normal::<f64>(&mut rng, 40, 4);
        let test_x = sample_normal::<f64>(&mut rng, 24, 4);
        let options = quick_options(2, vec![MethodKind::Ica, MethodKind::Ae], vec![3]);
        let a = compare_methods(&train_x, &test_x, &options);
        let b = compare_methods(&train_x, &test_x, &options);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn a_failing_method_is_flagged_without_aborting_the_table() {
        let mut rng = Rng::new(499);
        let train_x = sample_normal::<f64>(&mut rng, 30, 6);
        let test_x = sample_normal::<f64>(&mut rng, 20, 6);
        let options = quick_options(6, vec![MethodKind::Pca, MethodKind::Fa], vec![0]);
        let report = compare_methods(&train_x, &test_x, &options);
        assert_eq!(report.rows.len(), 3);
        let fa = &report.rows[1];
        assert_eq!(fa.method, "fa");
        assert!(fa.runs.is_empty());
        assert_eq!(fa.re_mean, None);
        assert!(fa.flags.iter().any(|f| f.contains("seed 0 failed")));
        assert!(report.rows[0].re_mean.unwrap() < 1e-10);
    }

    #[test]
    fn rows_come_out_in_canonical_order() {
        let mut rng = Rng::new(503);
        let train_x = sample_normal::<f64>(&mut rng, 40, 4);
        let test_x = sample_normal::<f64>(&mut rng, 24, 4);
        let options = quick_options(2, vec![MethodKind::Vae, MethodKind::Pca], vec![0]);
        let report = compare_methods(&train_x, &test_x, &options);
        let names: Vec<&str> = report.rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(names, ["pca", "umap", "vae"]);
        assert_eq!(report.loss_histories.len(), 1);
        assert_eq!(report.loss_histories[0].method, "vae");
        assert_eq!(report.loss_histories[0].train.len(), 4);
        assert_eq!(report.loss_histories[0].test.len(), 4);
    }

    #[test]
    fn report_round_trips_through_json() {
        let mut rng = Rng::new(509);
        let train_x = sample_normal::<f64>(&mut rng, 40, 4);
        let test_x = sample_normal::<f64>(&mut rng, 24, 4);
        let options = quick_options(2, vec![MethodKind::Pca, MethodKind::Ae], vec![0, 1]);
        let report = compare_methods(&train_x, &test_x, &options);
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn reference_block_is_the_published_table() {
        let rows = reference_rows();
        let expected = [
            ("PCA", 0.215, 0.305),
            ("FA", 0.198, 0.287),
            ("ICA", 0.176, 0.256),
            ("T-SNE", 0.152, 0.239),
            ("UMAP", 0.139, 0.218),
            ("AE(ours)", 0.115, 0.195),
        ];
        assert_eq!(rows.len(), expected.len());
        for (row, (model, re, rmse)) in rows.iter().zip(expected) {
            assert_eq!(row.model, model);
            assert_eq!(row.re, re);
            assert_eq!(row.rmse, rmse);
        }
    }
}

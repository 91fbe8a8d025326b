//! Stage orchestration over one artifact directory. Each invocation takes
//! the directory's lock, echoes the resolved config, runs its stages, and
//! leaves a `.failed` marker when anything goes wrong mid-write.

use std::fs;
use std::path::{Path, PathBuf};

use latentmine_core::analysis::{
    calibrate_threshold, detect_anomalies, kmeans, latent_features, KmeansConfig,
};
use latentmine_core::autoencoder::{
    load_model, save_model, symmetric_layer_specs, train, AutoencoderModel,
};
use latentmine_core::dataio::{
    inject_noise, load_csv, random_split, stratified_split, PreprocessPipeline, RawTable, Schema,
};
use latentmine_core::evaluation::{
    classifier_scores, compare_methods, export_anomalies_csv, export_clusters_csv,
    export_downstream_csv, export_loss_history_csv, export_metrics_json, export_table1_csv,
    fit_method, linear_svm_train, logreg_train, DownstreamRow, LogRegConfig, LossHistory,
    MethodKind, SvmConfig,
};
use latentmine_core::linalg::Rng;
use latentmine_core::storage::{read_matrix, write_matrix};
use latentmine_core::synthetic::{bank_like, manifold_table};
use latentmine_core::Mat;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SyntheticKind};

const VERSION_STAMP: &str = concat!("latentmine ", env!("CARGO_PKG_VERSION"), "\n");
/// Stream tag separating evaluation-noise draws from every other use of the
/// run seed.
const NOISE_STREAM: u64 = 0x4e4f_4953;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Prepare,
    Train,
    Compare,
    Anomalies,
    Cluster,
    Downstream,
    All,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("MissingPrerequisite: {what} not found in {dir}; {hint}")]
    MissingPrerequisite { what: String, dir: String, hint: String },
    #[error("output directory {dir} is locked by another run; remove {lock} if it is stale")]
    Locked { dir: String, lock: String },
    #[error("{module}/{op}: {cause}")]
    Stage { module: &'static str, op: &'static str, cause: String },
}

fn stage_err(module: &'static str, op: &'static str, e: impl std::fmt::Display) -> RunError {
    RunError::Stage { module, op, cause: e.to_string() }
}

/// Binary labels carried from `prepare` to `downstream`, aligned with the
/// persisted split order.
#[derive(Debug, Serialize, Deserialize)]
struct PreparedLabels {
    classes: [String; 2],
    train: Vec<u8>,
    test: Vec<u8>,
}

struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(dir: &Path) -> Result<LockGuard, RunError> {
        let path = dir.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(LockGuard { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(RunError::Locked {
                dir: dir.display().to_string(),
                lock: path.display().to_string(),
            }),
            Err(e) => Err(stage_err("cli", "lock", e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub struct Runner {
    config: RunConfig,
    out: PathBuf,
}

impl Runner {
    pub fn new(config: RunConfig) -> Runner {
        let out = PathBuf::from(&config.output.directory);
        Runner { config, out }
    }

    pub fn run(&self, stage: Stage) -> Result<(), RunError> {
        fs::create_dir_all(&self.out).map_err(|e| stage_err("cli", "create_out_dir", e))?;
        let _lock = LockGuard::acquire(&self.out)?;
        let result = self.dispatch(stage);
        match &result {
            Ok(()) => {
                let _ = fs::remove_file(self.path(".failed"));
            }
            Err(e) => {
                let _ = fs::write(self.path(".failed"), format!("{e}\n"));
            }
        }
        result
    }

    fn dispatch(&self, stage: Stage) -> Result<(), RunError> {
        self.write_stamp()?;
        match stage {
            Stage::Prepare => self.prepare(),
            Stage::Train => self.train_stage().map(|_| ()),
            Stage::Compare => self.compare_stage(),
            Stage::Anomalies => self.anomalies_stage(),
            Stage::Cluster => self.cluster_stage(),
            Stage::Downstream => self.downstream_stage(),
            Stage::All => {
                self.prepare()?;
                self.train_stage()?;
                self.compare_stage()?;
                self.anomalies_stage()?;
                self.cluster_stage()?;
                // An unlabeled dataset has no downstream task; asking for the
                // stage by name still errors.
                if self.path("labels.json").exists() {
                    self.downstream_stage()
                } else {
                    println!("downstream: skipped (dataset has no target column)");
                    Ok(())
                }
            }
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// The resolved config plus a version stamp make the directory
    /// self-describing; together with the seeds inside the config they
    /// reproduce every artifact byte-for-byte.
    fn write_stamp(&self) -> Result<(), RunError> {
        fs::write(self.path("config.toml"), self.config.to_toml_string())
            .map_err(|e| stage_err("cli", "write_config_echo", e))?;
        fs::write(self.path("version.txt"), VERSION_STAMP)
            .map_err(|e| stage_err("cli", "write_version", e))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| stage_err("cli", "serialize", e))?;
        text.push('\n');
        fs::write(self.path(name), text).map_err(|e| stage_err("cli", "write_artifact", e))
    }

    fn load_table(&self) -> Result<RawTable, RunError> {
        let dataset = &self.config.dataset;
        if let Some(synth) = &dataset.synthetic {
            return Ok(match synth.kind {
                SyntheticKind::Bank => bank_like(synth.rows, synth.seed),
                SyntheticKind::Manifold => manifold_table(synth.rows, synth.seed),
            });
        }
        let path = dataset.path.as_ref().expect("validated");
        let schema_path = dataset.schema.as_ref().expect("validated");
        let schema = Schema::load(Path::new(schema_path))
            .map_err(|e| stage_err("dataio", "schema_load", e))?;
        load_csv(Path::new(path), &schema).map_err(|e| stage_err("dataio", "load_csv", e))
    }

    fn prepare(&self) -> Result<(), RunError> {
        let c = &self.config;
        let table = self.load_table()?;
        let target = table.target().map_err(|e| stage_err("dataio", "target", e))?;
        let split = match (&target, c.dataset.stratify) {
            (Some(info), true) => {
                stratified_split(&info.labels, c.dataset.ratio, c.model.seed)
                    .map_err(|e| stage_err("dataio", "stratified_split", e))?
            }
            _ => random_split(table.rows(), c.dataset.ratio, c.model.seed),
        };
        let pipeline = PreprocessPipeline::fit(&table, &split.train)
            .map_err(|e| stage_err("dataio", "pipeline_fit", e))?;
        let train_x = pipeline
            .transform(&table, &split.train)
            .map_err(|e| stage_err("dataio", "pipeline_transform", e))?;
        let test_x = pipeline
            .transform(&table, &split.test)
            .map_err(|e| stage_err("dataio", "pipeline_transform", e))?;
        write_matrix(&self.path("train_x.bin"), &train_x)
            .map_err(|e| stage_err("storage", "write_matrix", e))?;
        write_matrix(&self.path("test_x.bin"), &test_x)
            .map_err(|e| stage_err("storage", "write_matrix", e))?;
        let mut noisy_note = String::new();
        if c.noise.enabled {
            let mut rng = Rng::derive(c.model.seed, NOISE_STREAM);
            let noisy = inject_noise(&test_x, c.noise.sigma, &pipeline.numeric_mask(), &mut rng);
            write_matrix(&self.path("test_x_noisy.bin"), &noisy)
                .map_err(|e| stage_err("storage", "write_matrix", e))?;
            noisy_note = format!(", noisy copy at sigma {}", c.noise.sigma);
        }
        self.write_json("pipeline.json", &pipeline)?;
        self.write_json("split.json", &split)?;
        if let Some(info) = &target {
            let labels = PreparedLabels {
                classes: info.classes.clone(),
                train: split.train.iter().map(|&i| info.labels[i]).collect(),
                test: split.test.iter().map(|&i| info.labels[i]).collect(),
            };
            self.write_json("labels.json", &labels)?;
        }
        println!(
            "prepare: {} train rows, {} test rows, {} columns{}",
            train_x.rows(),
            test_x.rows(),
            train_x.cols(),
            noisy_note
        );
        Ok(())
    }

    fn read_matrix_artifact(&self, name: &str) -> Result<Mat, RunError> {
        let path = self.path(name);
        if !path.exists() {
            return Err(RunError::MissingPrerequisite {
                what: name.to_string(),
                dir: self.out.display().to_string(),
                hint: "run the prepare subcommand first".to_string(),
            });
        }
        read_matrix(&path).map_err(|e| stage_err("storage", "read_matrix", e))
    }

    fn train_from(&self, train_x: &Mat, test_x: &Mat) -> Result<AutoencoderModel<f64>, RunError> {
        let c = &self.config;
        let specs = symmetric_layer_specs(train_x.cols(), &c.model.hidden, c.model.k);
        let mut rng = Rng::new(c.model.seed);
        let mut model = AutoencoderModel::init(&specs, c.model.mode.core(), &mut rng)
            .map_err(|e| stage_err("autoencoder", "init", e))?;
        let report = train(&mut model, train_x, Some(test_x), &c.train_config())
            .map_err(|e| stage_err("autoencoder", "train", e))?;
        save_model(&self.path("model.bin"), &model)
            .map_err(|e| stage_err("autoencoder", "save_model", e))?;
        let history = LossHistory {
            method: c.model.mode.name().to_string(),
            seed: c.model.seed,
            train: report.train_loss.clone(),
            test: report.test_loss.clone(),
        };
        export_loss_history_csv(&[history], &self.path("loss_history.csv"))
            .map_err(|e| stage_err("evaluation", "export_loss_history", e))?;
        println!(
            "train: {} ({} epochs), final train loss {:.4}, final test loss {:.4}",
            c.model.mode.name(),
            report.epochs,
            report.train_loss.last().copied().unwrap_or(f64::NAN),
            report.test_loss.last().copied().unwrap_or(f64::NAN),
        );
        Ok(model)
    }

    fn train_stage(&self) -> Result<AutoencoderModel<f64>, RunError> {
        let train_x = self.read_matrix_artifact("train_x.bin")?;
        let test_x = self.read_matrix_artifact("test_x.bin")?;
        self.train_from(&train_x, &test_x)
    }

    /// Loads the snapshot from a previous `train`, or trains one in place.
    fn ensure_model(
        &self,
        train_x: &Mat,
        test_x: &Mat,
    ) -> Result<AutoencoderModel<f64>, RunError> {
        let path = self.path("model.bin");
        if path.exists() {
            load_model(&path).map_err(|e| stage_err("autoencoder", "load_model", e))
        } else {
            self.train_from(train_x, test_x)
        }
    }

    fn compare_stage(&self) -> Result<(), RunError> {
        let train_x = self.read_matrix_artifact("train_x.bin")?;
        let eval_name = if self.config.noise.enabled { "test_x_noisy.bin" } else { "test_x.bin" };
        let test_x = self.read_matrix_artifact(eval_name)?;
        let options = self.config.compare_options();
        let mut report = compare_methods(&train_x, &test_x, &options);
        report.config = Some(self.config.to_toml_string());
        export_metrics_json(&report, &self.path("metrics.json"))
            .map_err(|e| stage_err("evaluation", "export_metrics", e))?;
        export_table1_csv(&report, &self.path("table1.csv"))
            .map_err(|e| stage_err("evaluation", "export_table1", e))?;
        println!("note: {}", report.metric_note);
        for row in &report.rows {
            let flags = if row.flags.is_empty() {
                String::new()
            } else {
                format!("  [{}]", row.flags.join("; "))
            };
            match (row.re_mean, row.rmse_mean) {
                (Some(re), Some(rmse)) => {
                    println!("compare: {:<4} re {re:.4}  rmse {rmse:.4}{flags}", row.method)
                }
                _ => println!("compare: {:<4} no successful runs{flags}", row.method),
            }
        }
        Ok(())
    }

    fn anomalies_stage(&self) -> Result<(), RunError> {
        let train_x = self.read_matrix_artifact("train_x.bin")?;
        let test_x = self.read_matrix_artifact("test_x.bin")?;
        let model = self.ensure_model(&train_x, &test_x)?;
        let train_errors = model
            .reconstruction_errors(&train_x)
            .map_err(|e| stage_err("autoencoder", "reconstruction_errors", e))?;
        let policy = self.config.threshold_policy();
        let threshold = calibrate_threshold(&train_errors, policy)
            .map_err(|e| stage_err("analysis", "calibrate_threshold", e))?;
        let report = detect_anomalies(&model, &test_x, threshold, policy)
            .map_err(|e| stage_err("analysis", "detect_anomalies", e))?;
        export_anomalies_csv(&report, &self.path("anomalies.csv"))
            .map_err(|e| stage_err("evaluation", "export_anomalies", e))?;
        println!(
            "anomalies: threshold {:.6} from train errors, {} of {} test rows flagged",
            threshold,
            report.flagged_count(),
            test_x.rows()
        );
        Ok(())
    }

    fn cluster_stage(&self) -> Result<(), RunError> {
        let c = &self.config;
        let train_x = self.read_matrix_artifact("train_x.bin")?;
        let test_x = self.read_matrix_artifact("test_x.bin")?;
        let model = self.ensure_model(&train_x, &test_x)?;
        let z = latent_features(&model, &test_x)
            .map_err(|e| stage_err("analysis", "latent_features", e))?;
        let kmeans_config =
            KmeansConfig { max_iter: c.cluster.max_iter, tol: c.cluster.tol, seed: c.model.seed };
        let assignment = kmeans(&z, c.cluster.k, &kmeans_config)
            .map_err(|e| stage_err("analysis", "kmeans", e))?;
        export_clusters_csv(&assignment, &self.path("clusters.csv"))
            .map_err(|e| stage_err("evaluation", "export_clusters", e))?;
        println!(
            "cluster: k {} on {} latent rows, inertia {:.4} after {} iterations",
            assignment.k,
            test_x.rows(),
            assignment.inertia,
            assignment.iterations
        );
        Ok(())
    }

    fn downstream_stage(&self) -> Result<(), RunError> {
        let c = &self.config;
        let train_x = self.read_matrix_artifact("train_x.bin")?;
        let test_x = self.read_matrix_artifact("test_x.bin")?;
        let labels_path = self.path("labels.json");
        if !labels_path.exists() {
            if self.path("split.json").exists() {
                return Err(stage_err(
                    "cli",
                    "downstream",
                    "the prepared dataset has no target column; downstream validation needs binary labels",
                ));
            }
            return Err(RunError::MissingPrerequisite {
                what: "labels.json".to_string(),
                dir: self.out.display().to_string(),
                hint: "run the prepare subcommand first".to_string(),
            });
        }
        let text = fs::read_to_string(&labels_path)
            .map_err(|e| stage_err("cli", "read_labels", e))?;
        let labels: PreparedLabels =
            serde_json::from_str(&text).map_err(|e| stage_err("cli", "parse_labels", e))?;
        let train_y: Vec<bool> = labels.train.iter().map(|&v| v == 1).collect();
        let test_y: Vec<bool> = labels.test.iter().map(|&v| v == 1).collect();
        let options = self.config.compare_options();
        let mut rows = Vec::new();
        for &kind in &options.methods {
            if kind == MethodKind::Tsne {
                println!("downstream: tsne skipped (no out-of-sample transform)");
                continue;
            }
            for &seed in &options.seeds {
                let fitted = fit_method(kind, &train_x, None, seed, &options).map_err(|e| {
                    stage_err("evaluation", "fit_method", format!("{kind} seed {seed}: {e}"))
                })?;
                let z_train = fitted
                    .transform(&train_x)
                    .map_err(|e| stage_err("evaluation", "transform", e))?;
                let z_test = fitted
                    .transform(&test_x)
                    .map_err(|e| stage_err("evaluation", "transform", e))?;
                for name in &c.downstream.classifiers {
                    let clf = if name == "logreg" {
                        let config = LogRegConfig {
                            lr: c.downstream.lr,
                            epochs: c.downstream.epochs,
                            l2: c.downstream.l2,
                        };
                        logreg_train(&z_train, &train_y, &config)
                    } else {
                        let config = SvmConfig {
                            lr: c.downstream.lr,
                            epochs: c.downstream.epochs,
                            c: c.downstream.c,
                        };
                        linear_svm_train(&z_train, &train_y, &config)
                    }
                    .map_err(|e| {
                        stage_err("evaluation", "classifier_train", format!("{kind} {name}: {e}"))
                    })?;
                    let scores = classifier_scores(&clf, &z_test, &test_y).map_err(|e| {
                        stage_err("evaluation", "classifier_scores", format!("{kind} {name}: {e}"))
                    })?;
                    println!(
                        "downstream: {:<4} {:<6} seed {seed}  accuracy {:.4}  roc-auc {:.4}",
                        kind.name(),
                        name,
                        scores.accuracy,
                        scores.roc_auc
                    );
                    rows.push(DownstreamRow {
                        method: kind.name().to_string(),
                        classifier: name.clone(),
                        seed,
                        accuracy: scores.accuracy,
                        roc_auc: scores.roc_auc,
                    });
                }
            }
        }
        export_downstream_csv(&rows, &self.path("downstream.csv"))
            .map_err(|e| stage_err("evaluation", "export_downstream", e))
    }
}

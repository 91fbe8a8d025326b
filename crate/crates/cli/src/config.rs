//! Run configuration: strict TOML parsing (unknown keys are fatal), defaults,
//! and the fully-resolved echo written into every output directory.

use std::path::{Path, PathBuf};

use latentmine_core::analysis::ThresholdPolicy;
use latentmine_core::autoencoder::{AdamConfig, Mode, TrainConfig};
use latentmine_core::baselines::TsneConfig;
use latentmine_core::evaluation::{CompareOptions, MethodKind};
use serde::Serialize;
use toml::value::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid toml: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unknown key \"{0}\"")]
    UnknownKey(String),
    #[error("key \"{key}\" must be {expected}")]
    TypeError { key: String, expected: &'static str },
    #[error("missing required key \"{0}\"")]
    MissingRequired(&'static str),
    #[error("key \"{key}\": {reason}")]
    Invalid { key: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelMode {
    Plain,
    Vae,
}

impl ModelMode {
    pub fn core(self) -> Mode {
        match self {
            ModelMode::Plain => Mode::Plain,
            ModelMode::Vae => Mode::Variational,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelMode::Plain => "ae",
            ModelMode::Vae => "vae",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    Bank,
    Manifold,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticConfig {
    pub kind: SyntheticKind,
    pub rows: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub ratio: f64,
    pub stratify: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelConfig {
    pub mode: ModelMode,
    pub hidden: Vec<usize>,
    pub k: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch: usize,
    pub epochs: usize,
    pub beta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TsneSection {
    pub perplexity: f64,
    pub iters: usize,
    pub row_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareConfig {
    pub methods: Vec<MethodKind>,
    pub k: usize,
    pub seeds: Vec<u64>,
    pub tsne: TsneSection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyConfig {
    pub policy: String,
    pub p: f64,
    pub k_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DownstreamConfig {
    pub classifiers: Vec<String>,
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub directory: String,
}

/// A fully-resolved run configuration. Every field holds its final value;
/// serializing and re-parsing it yields an identical config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub noise: NoiseConfig,
    pub compare: CompareConfig,
    pub anomaly: AnomalyConfig,
    pub cluster: ClusterConfig,
    pub downstream: DownstreamConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.model.epochs,
            batch_size: self.model.batch,
            adam: AdamConfig {
                lr: self.model.lr,
                beta1: self.model.beta1,
                beta2: self.model.beta2,
                eps: self.model.epsilon,
            },
            seed: self.model.seed,
            beta: self.model.beta,
            weight_decay: 0.0,
        }
    }

    pub fn threshold_policy(&self) -> ThresholdPolicy {
        if self.anomaly.policy == "quantile" {
            ThresholdPolicy::Quantile { p: self.anomaly.p }
        } else {
            ThresholdPolicy::MeanPlusKSigma { k: self.anomaly.k_sigma }
        }
    }

    pub fn compare_options(&self) -> CompareOptions {
        let defaults = CompareOptions::default();
        CompareOptions {
            k: self.compare.k,
            seeds: self.compare.seeds.clone(),
            methods: self.compare.methods.clone(),
            hidden: self.model.hidden.clone(),
            train: self.train_config(),
            tsne_perplexity: self.compare.tsne.perplexity,
            tsne: TsneConfig {
                iters: self.compare.tsne.iters,
                row_cap: self.compare.tsne.row_cap,
                ..defaults.tsne
            },
            ..defaults
        }
    }

    pub fn to_toml_string(&self) -> String {
        // Serialization of a fully-populated plain struct cannot fail.
        toml::to_string_pretty(self).expect("resolved config serializes")
    }

    pub fn from_toml_str(text: &str, default_out: &str) -> Result<RunConfig, ConfigError> {
        let root: Table = toml::from_str(text)?;
        parse_root(&root, default_out)
    }
}

/// Reads and resolves a config file. The default output directory is
/// `<root>/<config file stem>`, where the root is `$LATENTMINE_OUT` or
/// `runs`; an explicit `[output] directory` wins.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    let root = std::env::var("LATENTMINE_OUT").unwrap_or_else(|_| "runs".to_string());
    let default_out = PathBuf::from(root).join(stem);
    RunConfig::from_toml_str(&text, &default_out.to_string_lossy())
}

fn dotted(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn check_keys(table: &Table, path: &str, known: &[&str]) -> Result<(), ConfigError> {
    for key in table.keys() {
        if !known.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(dotted(path, key)));
        }
    }
    Ok(())
}

fn section<'a>(root: &'a Table, path: &str, name: &str) -> Result<Option<&'a Table>, ConfigError> {
    match root.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(ConfigError::TypeError {
            key: dotted(path, name),
            expected: "a table section",
        }),
    }
}

fn type_err(path: &str, key: &str, expected: &'static str) -> ConfigError {
    ConfigError::TypeError { key: dotted(path, key), expected }
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), reason: reason.into() }
}

fn get_f64(t: &Table, path: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
    match t.get(key) {
        None => Ok(default),
        Some(Value::Float(f)) => Ok(*f),
        Some(Value::Integer(i)) => Ok(*i as f64),
        Some(_) => Err(type_err(path, key, "a number")),
    }
}

fn get_usize(t: &Table, path: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
    match t.get(key) {
        None => Ok(default),
        Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
        Some(_) => Err(type_err(path, key, "a non-negative integer")),
    }
}

fn get_u64(t: &Table, path: &str, key: &str, default: u64) -> Result<u64, ConfigError> {
    match t.get(key) {
        None => Ok(default),
        Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
        Some(_) => Err(type_err(path, key, "a non-negative integer")),
    }
}

fn get_bool(t: &Table, path: &str, key: &str, default: bool) -> Result<bool, ConfigError> {
    match t.get(key) {
        None => Ok(default),
        Some(Value::Boolean(b)) => Ok(*b),
        Some(_) => Err(type_err(path, key, "a boolean")),
    }
}

fn get_str(t: &Table, path: &str, key: &str) -> Result<Option<String>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(type_err(path, key, "a string")),
    }
}

fn get_str_list(
    t: &Table,
    path: &str,
    key: &str,
    default: &[&str],
) -> Result<Vec<String>, ConfigError> {
    match t.get(key) {
        None => Ok(default.iter().map(|s| s.to_string()).collect()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                _ => Err(type_err(path, key, "an array of strings")),
            })
            .collect(),
        Some(_) => Err(type_err(path, key, "an array of strings")),
    }
}

fn get_u64_list(t: &Table, path: &str, key: &str, default: &[u64]) -> Result<Vec<u64>, ConfigError> {
    match t.get(key) {
        None => Ok(default.to_vec()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                _ => Err(type_err(path, key, "an array of non-negative integers")),
            })
            .collect(),
        Some(_) => Err(type_err(path, key, "an array of non-negative integers")),
    }
}

fn get_usize_list(
    t: &Table,
    path: &str,
    key: &str,
    default: &[usize],
) -> Result<Vec<usize>, ConfigError> {
    match t.get(key) {
        None => Ok(default.to_vec()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                _ => Err(type_err(path, key, "an array of non-negative integers")),
            })
            .collect(),
        Some(_) => Err(type_err(path, key, "an array of non-negative integers")),
    }
}

fn parse_root(root: &Table, default_out: &str) -> Result<RunConfig, ConfigError> {
    check_keys(
        root,
        "",
        &["dataset", "model", "noise", "compare", "anomaly", "cluster", "downstream", "output"],
    )?;
    let config = RunConfig {
        dataset: parse_dataset(section(root, "", "dataset")?)?,
        model: parse_model(section(root, "", "model")?)?,
        noise: parse_noise(section(root, "", "noise")?)?,
        compare: parse_compare(section(root, "", "compare")?)?,
        anomaly: parse_anomaly(section(root, "", "anomaly")?)?,
        cluster: parse_cluster(section(root, "", "cluster")?)?,
        downstream: parse_downstream(section(root, "", "downstream")?)?,
        output: parse_output(section(root, "", "output")?, default_out)?,
    };
    validate(&config)?;
    Ok(config)
}

fn parse_dataset(t: Option<&Table>) -> Result<DatasetConfig, ConfigError> {
    let empty = Table::new();
    let t = t.unwrap_or(&empty);
    let path = "dataset";
    check_keys(t, path, &["path", "schema", "ratio", "stratify", "synthetic"])?;
    let synthetic = match section(t, path, "synthetic")? {
        None => None,
        Some(s) => {
            let spath = "dataset.synthetic";
            check_keys(s, spath, &["kind", "rows", "seed"])?;
            let kind = match get_str(s, spath, "kind")? {
                Some(k) if k == "bank" => SyntheticKind::Bank,
                Some(k) if k == "manifold" => SyntheticKind::Manifold,
                Some(k) => {
                    return Err(invalid(
                        "dataset.synthetic.kind",
                        format!("unknown generator \"{k}\" (expected \"bank\" or \"manifold\")"),
                    ))
                }
                None => return Err(ConfigError::MissingRequired("dataset.synthetic.kind")),
            };
            Some(SyntheticConfig {
                kind,
                rows: get_usize(s, spath, "rows", 2000)?,
                seed: get_u64(s, spath, "seed", 0)?,
            })
        }
    };
    Ok(DatasetConfig {
        path: get_str(t, path, "path")?,
        schema: get_str(t, path, "schema")?,
        ratio: get_f64(t, path, "ratio", 0.2)?,
        stratify: get_bool(t, path, "stratify", true)?,
        synthetic,
    })
}

fn parse_model(t: Option<&Table>) -> Result<ModelConfig, ConfigError> {
    let empty = Table::new();
    let t = t.unwrap_or(&empty);
    let path = "model";
    check_keys(
        t,
        path,
        &["mode", "hidden", "k", "lr", "beta1", "beta2", "epsilon", "batch", "epochs", "beta", "seed"],
    )?;
    let mode = match get_str(t, path, "mode")?.as_deref() {
        None | Some("plain") => ModelMode::Plain,
        Some("vae") => ModelMode::Vae,
        Some(other) => {
            return Err(invalid(
                "model.mode",
                format!("unknown mode \"{other}\" (expected \"plain\" or \"vae\")"),
            ))
        }
    };
    Ok(ModelConfig {
        mode,
        hidden: get_usize_list(t, path, "hidden", &[64, 32])?,
        k: get_usize(t, path, "k", 8)?,
        lr: get_f64(t, path, "lr", 1e-3)?,
        beta1: get_f64(t, path, "beta1", 0.9)?,
        beta2: get_f64(t, path, "beta2", 0.999)?,
        epsilon: get_f64(t, path, "epsilon", 1e-8)?,
        batch: get_usize(t, path, "batch", 128)?,
        epochs: get_usize(t, path, "epochs", 30)?,
        beta: get_f64(t, path, "beta", 1.0)?,
        seed: get_u64(t, path, "seed", 0)?,
    })
}

fn parse_noise(t: Option<&Table>) -> Result<NoiseConfig, ConfigError> {
    let empty = Table::new();
    let t = t.unwrap_or(&empty);
    check_keys(t, "noise", &["sigma", "enabled"])?;
    Ok(NoiseConfig {
        sigma: get_f64(t, "noise", "sigma", 0.1)?,
        enabled: get_bool(t, "noise", "enabled", false)?,
    })
}

fn parse_compare(t: Option<&Table>) -> Result<CompareConfig, ConfigError> {
    let empty = Table::new();
    let t = t.unwrap_or(&empty);
    let path = "compare";
    check_keys(t, path, &["methods", "k", "seeds", "tsne"])?;
    let names = get_str_list(t, path, "methods", &["pca", "fa", "ica", "tsne", "ae", "vae"])?;
    let mut methods = Vec::new();
    for name in &names {
        let kind = MethodKind::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| invalid("compare.methods", format!("unknown method \"{name}\"")))?;
        if methods.contains(&kind) {
            return Err(invalid("compare.methods", format!("duplicate entry \"{name}\"")));
        }
        methods.push(kind);
    }
    let tsne = {
        let empty = Table::new();
        let s = section(t, path, "tsne")?.unwrap_or(&empty);
        let spath = "compare.tsne";
        check_keys(s, spath, &["perplexity", "iters", "row_cap"])?;
        TsneSection {
            perplexity: get_f64(s, spath, "perplexity", 30.0)?,
            iters: get_usize(s, spath, "iters", 1000)?,
            row_cap: get_usize(s, spath, "row_cap", 2000)?,
        }
    };
    Ok(CompareConfig {
        methods,
        k: get_usize(t, path, "k", 8)?,
        seeds: get_u64_list(t, path, "seeds", &[0])?,
        tsne,
    })
}

fn parse_anomaly(t: Option<&Table>) -> Result<AnomalyConfig, ConfigError> {
    let empty = Table::new();
    let t = t.unwrap_or(&empty);
    check_keys(t, "anomaly", &["policy", "p", "k_sigma"])?;
    let policy = get_str(t, "anomaly", "policy")?.unwrap_or_else(|| "quantile".to_string());
    if policy != "quantile" && policy != "mean_plus_k_sigma" {
        return Err(invalid(
            "anomaly.policy",
            format!("unknown policy \"{policy}\" (expected \"quantile\" or \"mean_plus_k_sigma\")"),
        ));
    }
    Ok(AnomalyConfig {
        policy,
        p: get_f64(t, "anomaly", "p", 0.99)?,
        k_sigma: get_f64(t, "anomaly", "k_sigma", 3.0)?,
    })
}

fn parse_cluster(t: Option<&Table>) -> Result<ClusterConfig, ConfigError> {
    let empty = Table::new();
    let t = t.unwrap_or(&empty);
    check_keys(t, "cluster", &["k", "max_iter", "tol"])?;
    Ok(ClusterConfig {
        k: get_usize(t, "cluster", "k", 8)?,
        max_iter: get_usize(t, "cluster", "max_iter", 100)?,
        tol: get_f64(t, "cluster", "tol", 1e-6)?,
    })
}

fn parse_downstream(t: Option<&Table>) -> Result<DownstreamConfig, ConfigError> {
    let empty = Table::new();
    let t = t.unwrap_or(&empty);
    let path = "downstream";
    check_keys(t, path, &["classifiers", "lr", "epochs", "l2", "c"])?;
    let classifiers = get_str_list(t, path, "classifiers", &["logreg", "svm"])?;
    for (i, name) in classifiers.iter().enumerate() {
        if name != "logreg" && name != "svm" {
            return Err(invalid(
                "downstream.classifiers",
                format!("unknown classifier \"{name}\" (expected \"logreg\" or \"svm\")"),
            ));
        }
        if classifiers[..i].contains(name) {
            return Err(invalid("downstream.classifiers", format!("duplicate entry \"{name}\"")));
        }
    }
    Ok(DownstreamConfig {
        classifiers,
        lr: get_f64(t, path, "lr", 0.1)?,
        epochs: get_usize(t, path, "epochs", 200)?,
        l2: get_f64(t, path, "l2", 1e-4)?,
        c: get_f64(t, path, "c", 1.0)?,
    })
}

fn parse_output(t: Option<&Table>, default_out: &str) -> Result<OutputConfig, ConfigError> {
    let empty = Table::new();
    let t = t.unwrap_or(&empty);
    check_keys(t, "output", &["directory"])?;
    Ok(OutputConfig {
        directory: get_str(t, "output", "directory")?.unwrap_or_else(|| default_out.to_string()),
    })
}

fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    if c.dataset.path.is_none() && c.dataset.synthetic.is_none() {
        return Err(ConfigError::MissingRequired("dataset.path"));
    }
    if c.dataset.path.is_some() && c.dataset.synthetic.is_some() {
        return Err(invalid(
            "dataset",
            "give either path or a [dataset.synthetic] section, not both",
        ));
    }
    if c.dataset.path.is_some() && c.dataset.schema.is_none() {
        return Err(ConfigError::MissingRequired("dataset.schema"));
    }
    if !(c.dataset.ratio > 0.0 && c.dataset.ratio < 1.0) {
        return Err(invalid("dataset.ratio", "must be strictly between 0 and 1"));
    }
    if let Some(s) = &c.dataset.synthetic {
        if s.rows < 10 {
            return Err(invalid("dataset.synthetic.rows", "need at least 10 rows to split"));
        }
    }
    for (key, v) in [
        ("model.k", c.model.k),
        ("model.batch", c.model.batch),
        ("model.epochs", c.model.epochs),
        ("compare.k", c.compare.k),
        ("compare.tsne.iters", c.compare.tsne.iters),
        ("compare.tsne.row_cap", c.compare.tsne.row_cap),
        ("cluster.k", c.cluster.k),
        ("cluster.max_iter", c.cluster.max_iter),
        ("downstream.epochs", c.downstream.epochs),
    ] {
        if v == 0 {
            return Err(invalid(key, "must be at least 1"));
        }
    }
    if c.model.hidden.contains(&0) {
        return Err(invalid("model.hidden", "layer widths must be at least 1"));
    }
    for (key, v) in [("model.lr", c.model.lr), ("downstream.lr", c.downstream.lr)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(invalid(key, "must be positive and finite"));
        }
    }
    for (key, v) in [
        ("noise.sigma", c.noise.sigma),
        ("cluster.tol", c.cluster.tol),
        ("downstream.l2", c.downstream.l2),
        ("downstream.c", c.downstream.c),
        ("anomaly.k_sigma", c.anomaly.k_sigma),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(invalid(key, "must be non-negative and finite"));
        }
    }
    if !(c.anomaly.p > 0.0 && c.anomaly.p < 1.0) {
        return Err(invalid("anomaly.p", "must be strictly between 0 and 1"));
    }
    if !c.compare.tsne.perplexity.is_finite() || c.compare.tsne.perplexity <= 1.0 {
        return Err(invalid("compare.tsne.perplexity", "must be finite and greater than 1"));
    }
    if c.compare.seeds.is_empty() {
        return Err(invalid("compare.seeds", "need at least one seed"));
    }
    if c.compare.methods.is_empty() {
        return Err(invalid("compare.methods", "need at least one method"));
    }
    if c.downstream.classifiers.is_empty() {
        return Err(invalid("downstream.classifiers", "need at least one classifier"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_toml_str(text, "runs/test")
    }

    const MINIMAL: &str = "[dataset]\npath = \"data/bank.csv\"\nschema = \"configs/bank_schema.toml\"\n";

    #[test]
    fn minimal_config_gets_all_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.dataset.ratio, 0.2);
        assert!(c.dataset.stratify);
        assert_eq!(c.model.k, 8);
        assert_eq!(c.model.epochs, 30);
        assert_eq!(c.model.lr, 1e-3);
        assert_eq!(c.model.hidden, vec![64, 32]);
        assert_eq!(c.model.batch, 128);
        assert_eq!(c.model.mode, ModelMode::Plain);
        assert_eq!(c.compare.k, 8);
        assert_eq!(c.compare.seeds, vec![0]);
        assert_eq!(c.compare.methods.len(), 6);
        assert_eq!(c.anomaly.policy, "quantile");
        assert_eq!(c.anomaly.p, 0.99);
        assert_eq!(c.cluster.k, 8);
        assert_eq!(c.downstream.classifiers, vec!["logreg", "svm"]);
        assert_eq!(c.output.directory, "runs/test");
    }

    #[test]
    fn misspelled_key_is_fatal() {
        let text = format!("{MINIMAL}[model]\nepohcs = 10\n");
        match parse(&text) {
            Err(ConfigError::UnknownKey(k)) => assert_eq!(k, "model.epohcs"),
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn unknown_section_is_fatal() {
        let text = format!("{MINIMAL}[outputs]\ndirectory = \"x\"\n");
        assert!(matches!(parse(&text), Err(ConfigError::UnknownKey(k)) if k == "outputs"));
    }

    #[test]
    fn unknown_nested_tsne_key_is_fatal() {
        let text = format!("{MINIMAL}[compare.tsne]\nprplexity = 10.0\n");
        assert!(
            matches!(parse(&text), Err(ConfigError::UnknownKey(k)) if k == "compare.tsne.prplexity")
        );
    }

    #[test]
    fn wrong_type_is_fatal() {
        let text = format!("{MINIMAL}[model]\nlr = \"fast\"\n");
        match parse(&text) {
            Err(ConfigError::TypeError { key, .. }) => assert_eq!(key, "model.lr"),
            other => panic!("expected TypeError, got {other:?}"),
        }
    }

    #[test]
    fn integer_accepted_where_float_expected() {
        let text = format!("{MINIMAL}[model]\nbeta = 2\n");
        assert_eq!(parse(&text).unwrap().model.beta, 2.0);
    }

    #[test]
    fn dataset_path_is_required() {
        assert!(matches!(
            parse("[model]\nk = 4\n"),
            Err(ConfigError::MissingRequired("dataset.path"))
        ));
    }

    #[test]
    fn schema_required_with_path() {
        assert!(matches!(
            parse("[dataset]\npath = \"x.csv\"\n"),
            Err(ConfigError::MissingRequired("dataset.schema"))
        ));
    }

    #[test]
    fn synthetic_replaces_path() {
        let c = parse("[dataset.synthetic]\nkind = \"bank\"\nrows = 500\n").unwrap();
        let s = c.dataset.synthetic.unwrap();
        assert_eq!(s.kind, SyntheticKind::Bank);
        assert_eq!(s.rows, 500);
        assert_eq!(s.seed, 0);
    }

    #[test]
    fn path_plus_synthetic_rejected() {
        let text = "[dataset]\npath = \"x.csv\"\nschema = \"s.toml\"\n[dataset.synthetic]\nkind = \"bank\"\n";
        assert!(matches!(parse(text), Err(ConfigError::Invalid { key, .. }) if key == "dataset"));
    }

    #[test]
    fn unknown_method_rejected() {
        let text = format!("{MINIMAL}[compare]\nmethods = [\"pca\", \"umap\"]\n");
        assert!(
            matches!(parse(&text), Err(ConfigError::Invalid { key, .. }) if key == "compare.methods")
        );
    }

    #[test]
    fn mean_plus_k_sigma_policy_parses() {
        let text = format!("{MINIMAL}[anomaly]\npolicy = \"mean_plus_k_sigma\"\nk_sigma = 2.5\n");
        let c = parse(&text).unwrap();
        assert_eq!(
            c.threshold_policy(),
            latentmine_core::analysis::ThresholdPolicy::MeanPlusKSigma { k: 2.5 }
        );
    }

    #[test]
    fn resolved_echo_reparses_identically() {
        let text = format!(
            "{MINIMAL}[model]\nmode = \"vae\"\nk = 4\nhidden = [32]\nseed = 9\n\
             [noise]\nenabled = true\n[compare]\nseeds = [0, 1, 2]\nmethods = [\"pca\", \"ae\"]\n"
        );
        let c = parse(&text).unwrap();
        let echoed = RunConfig::from_toml_str(&c.to_toml_string(), "elsewhere").unwrap();
        assert_eq!(echoed, c);
    }

    #[test]
    fn synthetic_echo_reparses_identically() {
        let c = parse("[dataset.synthetic]\nkind = \"manifold\"\nrows = 300\nseed = 4\n").unwrap();
        let echoed = RunConfig::from_toml_str(&c.to_toml_string(), "elsewhere").unwrap();
        assert_eq!(echoed, c);
    }

    #[test]
    fn out_of_range_ratio_rejected() {
        let text = "[dataset]\npath = \"x.csv\"\nschema = \"s.toml\"\nratio = 1.5\n";
        assert!(
            matches!(parse(text), Err(ConfigError::Invalid { key, .. }) if key == "dataset.ratio")
        );
    }

    #[test]
    fn train_config_mirrors_model_section() {
        let text = format!("{MINIMAL}[model]\nlr = 0.01\nbatch = 64\nepochs = 5\nseed = 3\n");
        let tc = parse(&text).unwrap().train_config();
        assert_eq!(tc.adam.lr, 0.01);
        assert_eq!(tc.batch_size, 64);
        assert_eq!(tc.epochs, 5);
        assert_eq!(tc.seed, 3);
        assert_eq!(tc.weight_decay, 0.0);
    }
}

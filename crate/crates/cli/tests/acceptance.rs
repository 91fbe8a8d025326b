//! End-to-end checks against the built binary: the bundled synthetic config
//! runs every stage, reruns are byte-identical, and the documented failure
//! modes exit nonzero with structured messages.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_latentmine")
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(subcommand: &str, config: &Path, out: &Path) -> Output {
    Command::new(bin())
        .arg(subcommand)
        .args(["--config".as_ref(), config.as_os_str(), "--out".as_ref(), out.as_os_str()])
        .output()
        .expect("binary runs")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn criterion_12_full_run_is_reproducible() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = repo_config("synthetic.toml");

    let first = run("all", &config, &out);
    assert!(
        first.status.success(),
        "first run failed: {}",
        stderr_of(&first)
    );
    assert!(
        start.elapsed() < Duration::from_secs(300),
        "bundled synthetic run exceeded the smoke budget"
    );
    let stdout = String::from_utf8_lossy(&first.stdout);
    assert!(
        stdout.contains("RE = mean absolute error"),
        "metric definitions not announced:\n{stdout}"
    );

    let expected = [
        "config.toml",
        "version.txt",
        "pipeline.json",
        "split.json",
        "labels.json",
        "train_x.bin",
        "test_x.bin",
        "test_x_noisy.bin",
        "model.bin",
        "loss_history.csv",
        "metrics.json",
        "table1.csv",
        "anomalies.csv",
        "clusters.csv",
        "downstream.csv",
    ];
    for name in expected {
        assert!(out.join(name).exists(), "missing artifact {name}");
    }
    assert!(!out.join(".failed").exists());
    assert!(!out.join(".lock").exists());

    let tracked = ["metrics.json", "table1.csv", "loss_history.csv"];
    let snapshot: Vec<Vec<u8>> =
        tracked.iter().map(|name| fs::read(out.join(name)).unwrap()).collect();

    let second = run("all", &config, &out);
    assert!(
        second.status.success(),
        "second run failed: {}",
        stderr_of(&second)
    );
    for (name, before) in tracked.iter().zip(&snapshot) {
        let after = fs::read(out.join(name)).unwrap();
        assert_eq!(&after, before, "{name} changed across identical reruns");
    }
    println!(
        "criterion 12, reproducibility: PASS, {} artifacts, byte-identical rerun, {:.2?}",
        expected.len(),
        start.elapsed()
    );
}

#[test]
fn compare_before_prepare_reports_missing_prerequisite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty");
    let output = run("compare", &repo_config("synthetic.toml"), &out);
    assert!(!output.status.success());
    let stderr = stderr_of(&output);
    assert!(
        stderr.contains("MissingPrerequisite"),
        "unexpected stderr: {stderr}"
    );
    let marker = fs::read_to_string(out.join(".failed")).unwrap();
    assert!(marker.contains("MissingPrerequisite"));
}

#[test]
fn misspelled_config_key_fails_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("typo.toml");
    fs::write(&config, "[dataset.synthetic]\nkind = \"bank\"\n[model]\nepohcs = 10\n").unwrap();
    let out = dir.path().join("out");
    let output = run("prepare", &config, &out);
    assert!(!output.status.success());
    let stderr = stderr_of(&output);
    assert!(
        stderr.contains("unknown key \"model.epohcs\""),
        "unexpected stderr: {stderr}"
    );
    assert!(!out.exists(), "output directory created for a rejected config");
}

#[test]
fn locked_directory_refuses_a_second_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join(".lock"), "").unwrap();
    let output = run("prepare", &repo_config("synthetic.toml"), &out);
    assert!(!output.status.success());
    assert!(stderr_of(&output).contains("locked"));
    assert!(out.join(".lock").exists(), "foreign lock was removed");
    assert!(
        !out.join(".failed").exists(),
        "a locked-out run must not scribble into the owner's directory"
    );
}

#[test]
fn config_echo_drives_an_identical_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let first = run("prepare", &repo_config("synthetic.toml"), &out);
    assert!(first.status.success(), "{}", stderr_of(&first));
    let echo = fs::read(out.join("config.toml")).unwrap();

    // The echo carries the resolved output directory, so no --out is needed.
    let second = Command::new(bin())
        .arg("prepare")
        .args(["--config".as_ref(), out.join("config.toml").as_os_str()])
        .output()
        .expect("binary runs");
    assert!(second.status.success(), "{}", stderr_of(&second));
    assert_eq!(
        fs::read(out.join("config.toml")).unwrap(),
        echo,
        "re-echoed config differs from the original echo"
    );
}

#[test]
fn downstream_on_unlabeled_data_is_a_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = repo_config("manifold.toml");
    let prepared = run("prepare", &config, &out);
    assert!(prepared.status.success(), "{}", stderr_of(&prepared));
    let output = run("downstream", &config, &out);
    assert!(!output.status.success());
    assert!(stderr_of(&output).contains("no target column"));
}

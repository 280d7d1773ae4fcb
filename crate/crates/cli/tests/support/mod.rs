//! Helpers for driving the `smtplace` binary from integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smtplace::files;
use smtplace::modelfile::{model_path, ModelFile, TrainingInfo};
use smtplace_core::domain::{FEATURE_DIM, PLACEMENT_OFFSET};
use smtplace_core::{ModelKind, RegressionModel, SvrModel, Target};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Runs the binary in `cwd` with the given arguments.
pub fn run(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smtplace"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("failed to launch smtplace")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs and requires exit status 0.
pub fn run_ok(cwd: &Path, args: &[&str]) -> Output {
    let o = run(cwd, args);
    assert!(
        o.status.success(),
        "smtplace {args:?} failed with {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        stdout(&o),
        stderr(&o)
    );
    o
}

/// Writes SVR model files whose prediction for target k is
/// `biases[k] + chi_k`, i.e. the identity on the placement slots.
pub fn write_identity_models(dir: &Path, biases: [f64; 3]) {
    fs::create_dir_all(dir).unwrap();
    for (k, target) in Target::ALL.into_iter().enumerate() {
        let mut w = vec![0.0; FEATURE_DIM];
        w[PLACEMENT_OFFSET + k] = 1.0;
        let model = RegressionModel::Svr(SvrModel::from_weights(w, biases[k]));
        let info = TrainingInfo {
            dataset_sha256: String::new(),
            split_seed: 0,
            train_size: 0,
        };
        let file = ModelFile::new(target, info, model);
        files::write_json(&model_path(dir, ModelKind::Svr, target), &file).unwrap();
    }
}

/// Relative path to bytes for every file below `dir`.
pub fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Names of the files that differ between two trees, or exist in only one.
pub fn tree_diff(a: &Path, b: &Path) -> Vec<PathBuf> {
    let (ta, tb) = (tree(a), tree(b));
    let mut diff: Vec<PathBuf> = ta
        .iter()
        .filter(|(k, v)| tb.get(*k) != Some(*v))
        .map(|(k, _)| k.clone())
        .collect();
    diff.extend(tb.keys().filter(|k| !ta.contains_key(*k)).cloned());
    diff
}

/// The full generate / train / evaluate / optimize pipeline under `root`,
/// with every path relative so two roots can be compared byte for byte.
/// Returns the exit code of `optimize`.
pub fn pipeline(root: &Path, records_per_type: &str) -> Option<i32> {
    fs::create_dir_all(root).unwrap();
    fs::copy(fixture("contexts.csv"), root.join("contexts.csv")).unwrap();
    run_ok(
        root,
        &[
            "generate",
            "--records-per-type",
            records_per_type,
            "--out",
            "data",
        ],
    );
    run_ok(root, &["train", "data/dataset.csv", "--out", "models"]);
    run_ok(
        root,
        &[
            "evaluate",
            "data/dataset.csv",
            "--models",
            "models",
            "--out",
            "eval",
        ],
    );
    run(
        root,
        &[
            "optimize",
            "contexts.csv",
            "--models",
            "models",
            "--out",
            "opt",
        ],
    )
    .status
    .code()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

//! Persisted models and the split manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smtplace_core::domain::{SplitIndices, FEATURE_NAMES};
use smtplace_core::{ModelKind, RegressionModel, Target};

use crate::error::{CliError, Result};
use crate::files;

pub const MODEL_FORMAT: &str = "smtplace-model";
pub const MODEL_VERSION: u32 = 1;
pub const SPLIT_FILE: &str = "split.json";

/// Where a model came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub dataset_sha256: String,
    pub split_seed: u64,
    pub train_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub encoding_hash: String,
    pub feature_names: Vec<String>,
    pub target: Target,
    pub training: TrainingInfo,
    pub model: RegressionModel,
}

impl ModelFile {
    pub fn new(target: Target, training: TrainingInfo, model: RegressionModel) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            encoding_hash: files::encoding_hash(),
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            target,
            training,
            model,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }
}

pub fn model_path(dir: &Path, kind: ModelKind, target: Target) -> PathBuf {
    dir.join(format!("{}_{}.json", kind.name(), target.name()))
}

pub fn load_model(path: &Path, kind: ModelKind, target: Target) -> Result<ModelFile> {
    let file: ModelFile = files::read_json(path)?;
    if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
        return Err(CliError::input(
            path,
            format!("not a {MODEL_FORMAT} v{MODEL_VERSION} file"),
        ));
    }
    if file.encoding_hash != files::encoding_hash() {
        return Err(CliError::input(
            path,
            "feature encoding hash does not match this build; retrain the model",
        ));
    }
    if file.target != target || file.kind() != kind {
        return Err(CliError::input(
            path,
            format!(
                "holds a {} model for {}, expected {} for {}",
                file.kind().name(),
                file.target,
                kind.name(),
                target
            ),
        ));
    }
    Ok(file)
}

/// The three per-target models of one kind, in [`Target::ALL`] order.
pub fn load_models(dir: &Path, kind: ModelKind) -> Result<[ModelFile; 3]> {
    let [a, b, c] = Target::ALL.map(|t| model_path(dir, kind, t));
    Ok([
        load_model(&a, kind, Target::PostX)?,
        load_model(&b, kind, Target::PostY)?,
        load_model(&c, kind, Target::PostTheta)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub dataset_sha256: String,
    pub records: usize,
    pub split: SplitIndices,
}

//! Run configuration read from `--config <json>`; every block is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};
use smtplace_core::es::EsConfig;
use smtplace_core::nlp::{Bounds, Thresholds};
use smtplace_core::{ForestConfig, GeneratorConfig, SvrConfig};

use crate::error::{CliError, Result};
use crate::files;

pub const DEFAULT_SEED: u64 = 42;

/// Per-field threshold override; unset fields keep the directory default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdOverride {
    pub tau_theta: Option<f64>,
    pub tau_x: Option<f64>,
    pub tau_y: Option<f64>,
}

impl ThresholdOverride {
    pub fn apply(&self, base: Thresholds) -> Thresholds {
        Thresholds {
            tau_theta: self.tau_theta.unwrap_or(base.tau_theta),
            tau_x: self.tau_x.unwrap_or(base.tau_x),
            tau_y: self.tau_y.unwrap_or(base.tau_y),
        }
    }
}

/// Per-coordinate box override as `[lower, upper]`; unset coordinates keep
/// the bounds computed from the paste state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsOverride {
    pub x: Option<[f64; 2]>,
    pub y: Option<[f64; 2]>,
    pub theta: Option<[f64; 2]>,
}

impl BoundsOverride {
    pub fn apply(&self, base: Bounds) -> Bounds {
        let mut out = base;
        for (d, pair) in [self.x, self.y, self.theta].into_iter().enumerate() {
            if let Some([lo, hi]) = pair {
                out.lower[d] = lo;
                out.upper[d] = hi;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides every block's own seed (and the split seed) when set.
    pub seed: Option<u64>,
    pub generator: GeneratorConfig,
    pub svr: SvrConfig,
    pub forest: ForestConfig,
    pub es: EsConfig,
    pub thresholds: ThresholdOverride,
    pub bounds: BoundsOverride,
}

impl RunConfig {
    /// Loads the file (if any), then applies a `--seed` flag on top.
    pub fn load(path: Option<&Path>, seed_flag: Option<u64>) -> Result<Self> {
        let mut config: RunConfig = match path {
            Some(p) => files::read_json(p).map_err(|e| match e {
                CliError::Input { path, message } => {
                    CliError::Config(format!("{}: {message}", path.display()))
                }
                other => other,
            })?,
            None => RunConfig::default(),
        };
        if seed_flag.is_some() {
            config.seed = seed_flag;
        }
        if let Some(seed) = config.seed {
            config.generator.oracle.seed = seed;
            config.forest.seed = seed;
            config.es.seed = seed;
        }
        config.svr.validate()?;
        config.es.validate()?;
        config.generator.validate()?;
        Ok(config)
    }

    pub fn split_seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

/// Provenance written next to every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho<'a> {
    pub command: &'static str,
    pub version: &'static str,
    pub inputs: Vec<InputFile>,
    pub options: serde_json::Value,
    pub config: &'a RunConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

impl InputFile {
    pub fn new(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: files::file_sha256(path)?,
        })
    }
}

pub fn write_echo(out: &Path, echo: &ConfigEcho<'_>) -> Result<()> {
    files::write_json(&out.join(format!("{}.config.json", echo.command)), echo)
}

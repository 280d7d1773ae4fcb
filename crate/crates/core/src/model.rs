//! The common predictor seam used by evaluation and the placement problem.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forest::Forest;
use crate::svr::SvrModel;

pub trait Predictor {
    fn input_dim(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svr,
    Rfr,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Svr => "svr",
            Self::Rfr => "rfr",
        }
    }
}

/// A fitted model for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegressionModel {
    Svr(SvrModel),
    Rfr(Forest),
}

impl RegressionModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Svr(_) => ModelKind::Svr,
            Self::Rfr(_) => ModelKind::Rfr,
        }
    }
}

impl Predictor for RegressionModel {
    fn input_dim(&self) -> usize {
        match self {
            Self::Svr(m) => m.training_dim,
            Self::Rfr(f) => f.training_dim,
        }
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Self::Svr(m) => m.predict(x),
            Self::Rfr(f) => f.predict(x),
        }
    }
}

impl Predictor for SvrModel {
    fn input_dim(&self) -> usize {
        self.training_dim
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        SvrModel::predict(self, x)
    }
}

impl Predictor for Forest {
    fn input_dim(&self) -> usize {
        self.training_dim
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        Forest::predict(self, x)
    }
}

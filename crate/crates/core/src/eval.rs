//! Accuracy metrics and the train / validation / test benchmark.
//!
//! The headline pairing is R^2 on the training set and RMSE on the test set
//! for every model and target; the other combinations are kept as
//! diagnostics.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::{
    design_matrix, encode_features, split_dataset, DatasetSplit, PlacementRecord, Target,
};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestConfig};
use crate::model::{ModelKind, Predictor, RegressionModel};
use crate::svr::{fit_svr, SvrConfig};

fn check_lengths(predictions: &[f64], truth: &[f64], min: usize) -> Result<()> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: predictions.len(),
        });
    }
    if truth.len() < min {
        return Err(Error::TooFewRecords {
            required: min,
            actual: truth.len(),
        });
    }
    Ok(())
}

/// Root-mean-squared error.
pub fn rmse(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(predictions, truth, 1)?;
    let sse: f64 = predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(libm::sqrt(sse / truth.len() as f64))
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r_squared(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(predictions, truth, 2)?;
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let ss_res: f64 = predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Fits one model of `kind` for `target` on `records`.
pub fn fit_model(
    kind: ModelKind,
    records: &[PlacementRecord],
    target: Target,
    svr: &SvrConfig,
    forest: &ForestConfig,
) -> Result<RegressionModel> {
    let (x, y) = design_matrix(records, target)?;
    Ok(match kind {
        ModelKind::Svr => RegressionModel::Svr(fit_svr(&x, &y, svr)?),
        ModelKind::Rfr => RegressionModel::Rfr(fit_forest(&x, &y, forest)?),
    })
}

/// One model per target, in [`Target::ALL`] order.
pub fn fit_models(
    kind: ModelKind,
    records: &[PlacementRecord],
    svr: &SvrConfig,
    forest: &ForestConfig,
) -> Result<[RegressionModel; 3]> {
    let [a, b, c] = Target::ALL;
    Ok([
        fit_model(kind, records, a, svr, forest)?,
        fit_model(kind, records, b, svr, forest)?,
        fit_model(kind, records, c, svr, forest)?,
    ])
}

pub fn predict_all<P: Predictor + ?Sized>(
    model: &P,
    records: &[PlacementRecord],
) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|r| model.predict(encode_features(r)?.as_slice()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitScore {
    pub rmse: f64,
    /// `None` when the split's truth has zero variance.
    pub r2: Option<f64>,
}

pub fn score<P: Predictor + ?Sized>(
    model: &P,
    records: &[PlacementRecord],
    target: Target,
) -> Result<SplitScore> {
    let predictions = predict_all(model, records)?;
    let truth = records
        .iter()
        .map(|r| r.target(target))
        .collect::<Result<Vec<_>>>()?;
    let rmse = rmse(&predictions, &truth)?;
    let r2 = match r_squared(&predictions, &truth) {
        Ok(v) => Some(v),
        Err(Error::ZeroVariance) | Err(Error::TooFewRecords { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(SplitScore { rmse, r2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: ModelKind,
    pub target: Target,
    /// Headline fit measure (training set).
    pub r2_train: Option<f64>,
    /// Headline error measure (test set), in target units.
    pub rmse_test: f64,
    pub train: SplitScore,
    pub validation: SplitScore,
    pub test: SplitScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub svr_config: Option<SvrConfig>,
    pub forest_config: Option<ForestConfig>,
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn row(&self, model: ModelKind, target: Target) -> Option<&EvalRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.target == target)
    }
}

/// Scores already fitted models (one per target, [`Target::ALL`] order).
pub fn evaluate_models<P: Predictor>(
    kind: ModelKind,
    models: &[P; 3],
    split: &DatasetSplit,
) -> Result<Vec<EvalRow>> {
    let mut rows = Vec::with_capacity(3);
    for (model, target) in models.iter().zip(Target::ALL) {
        let train = score(model, &split.train, target)?;
        let validation = score(model, &split.validation, target)?;
        let test = score(model, &split.test, target)?;
        rows.push(EvalRow {
            model: kind,
            target,
            r2_train: train.r2,
            rmse_test: test.rmse,
            train,
            validation,
            test,
        });
    }
    Ok(rows)
}

/// Splits 70:10:20, fits three SVR and three forest models on the training
/// part and scores them.
pub fn run_benchmark(
    records: &[PlacementRecord],
    svr: &SvrConfig,
    forest: &ForestConfig,
    seed: u64,
) -> Result<EvalReport> {
    let split = split_dataset(records, seed)?;
    let mut rows = Vec::with_capacity(6);
    for kind in [ModelKind::Svr, ModelKind::Rfr] {
        let models = fit_models(kind, &split.train, svr, forest)?;
        rows.extend(evaluate_models(kind, &models, &split)?);
    }
    let (train_size, validation_size, test_size) = split.sizes();
    Ok(EvalReport {
        seed,
        train_size,
        validation_size,
        test_size,
        svr_config: Some(*svr),
        forest_config: Some(*forest),
        rows,
    })
}

//! The five subcommands.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use smtplace_core::domain::{encode_features, split_dataset, DatasetSplit, PlacementRecord};
use smtplace_core::es::{optimize as run_es, EsOutcome};
use smtplace_core::eval::{evaluate_models, fit_models, predict_all, EvalReport};
use smtplace_core::nlp::{Bounds, Feasibility, NlpProblem, Thresholds};
use smtplace_core::synth::generate_dataset;
use smtplace_core::{Error, ModelKind, PlacementSetting, Predictor, RegressionModel, Target};

use crate::config::{write_echo, ConfigEcho, InputFile, RunConfig};
use crate::dataset::{read_labeled, read_records, save_records};
use crate::error::{CliError, Result};
use crate::files::{self, config_hash, ensure_dir, file_sha256, write_json, write_text};
use crate::modelfile::{
    load_models, model_path, ModelFile, SplitManifest, TrainingInfo, SPLIT_FILE,
};
use crate::Common;

pub const DATASET_FILE: &str = "dataset.csv";
pub const DATASET_META_FILE: &str = "dataset.meta.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const RESIDUALS_FILE: &str = "residuals.csv";
pub const RECOMMENDATIONS_JSON: &str = "recommendations.json";
pub const RECOMMENDATIONS_CSV: &str = "recommendations.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

/// Placement band the source line reports for good recommendations, shown
/// as a sanity column: |x|, |y| within 50 um and |theta| within 2 degrees.
pub const REFERENCE_BAND: (f64, f64) = (50.0, 2.0);

fn config_inputs(common: &Common) -> Result<Vec<InputFile>> {
    common
        .config
        .as_deref()
        .map(InputFile::new)
        .into_iter()
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::input(path, format!("{other:?}")),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct DatasetMeta {
    seed: u64,
    records: usize,
    records_per_type: usize,
    directories: usize,
    config_hash: String,
    dataset_sha256: String,
    encoding_hash: String,
}

pub fn generate(common: &Common, records_per_type: Option<usize>) -> Result<()> {
    let mut config = RunConfig::load(common.config.as_deref(), common.seed)?;
    if let Some(n) = records_per_type {
        config.generator.records_per_type = n;
    }
    let records = generate_dataset(&config.generator)?;
    ensure_dir(&common.out)?;
    let path = common.out.join(DATASET_FILE);
    save_records(&path, &records)?;
    let meta = DatasetMeta {
        seed: config.generator.oracle.seed,
        records: records.len(),
        records_per_type: config.generator.records_per_type,
        directories: config.generator.directories.len(),
        config_hash: config_hash(&config.generator),
        dataset_sha256: file_sha256(&path)?,
        encoding_hash: files::encoding_hash(),
    };
    write_json(&common.out.join(DATASET_META_FILE), &meta)?;
    write_echo(
        &common.out,
        &ConfigEcho {
            command: "generate",
            version: env!("CARGO_PKG_VERSION"),
            inputs: config_inputs(common)?,
            options: serde_json::json!({ "records_per_type": records_per_type }),
            config: &config,
        },
    )?;
    println!("wrote {} records to {}", records.len(), path.display());
    Ok(())
}

fn describe(model: &RegressionModel) -> String {
    match model {
        RegressionModel::Svr(m) => format!(
            "svr: {} passes, KKT violation {:.2e}{}",
            m.passes,
            m.kkt_violation,
            if m.converged { "" } else { " (not converged)" }
        ),
        RegressionModel::Rfr(f) => format!("rfr: {} trees, mtry {}", f.trees.len(), f.mtry),
    }
}

pub fn train(data: &Path, kind: Option<ModelKind>, common: &Common) -> Result<()> {
    let config = RunConfig::load(common.config.as_deref(), common.seed)?;
    let records = read_labeled(data)?;
    let dataset_sha256 = file_sha256(data)?;
    let split = split_dataset(&records, config.split_seed())?;
    ensure_dir(&common.out)?;
    let manifest = SplitManifest {
        dataset_sha256: dataset_sha256.clone(),
        records: records.len(),
        split: split.indices.clone(),
    };
    write_json(&common.out.join(SPLIT_FILE), &manifest)?;

    let kinds = match kind {
        Some(k) => vec![k],
        None => vec![ModelKind::Svr, ModelKind::Rfr],
    };
    let training = TrainingInfo {
        dataset_sha256,
        split_seed: config.split_seed(),
        train_size: split.train.len(),
    };
    for kind in &kinds {
        let models = fit_models(*kind, &split.train, &config.svr, &config.forest)?;
        for (model, target) in models.into_iter().zip(Target::ALL) {
            let path = model_path(&common.out, *kind, target);
            println!("{target} {}", describe(&model));
            write_json(&path, &ModelFile::new(target, training.clone(), model))?;
        }
    }
    let mut inputs = vec![InputFile::new(data)?];
    inputs.extend(config_inputs(common)?);
    write_echo(
        &common.out,
        &ConfigEcho {
            command: match kind {
                Some(ModelKind::Svr) => "train-svr",
                Some(ModelKind::Rfr) => "train-rfr",
                None => "train",
            },
            version: env!("CARGO_PKG_VERSION"),
            inputs,
            options: serde_json::json!({ "model": kind.map(ModelKind::name) }),
            config: &config,
        },
    )?;
    let (tr, va, te) = split.sizes();
    println!(
        "split {tr}/{va}/{te} (seed {}); models written to {}",
        config.split_seed(),
        common.out.display()
    );
    Ok(())
}

fn rebuild_split(records: &[PlacementRecord], manifest: &SplitManifest) -> DatasetSplit {
    let pick = |ix: &[usize]| ix.iter().map(|&i| records[i]).collect::<Vec<_>>();
    DatasetSplit {
        train: pick(&manifest.split.train),
        validation: pick(&manifest.split.validation),
        test: pick(&manifest.split.test),
        indices: manifest.split.clone(),
    }
}

fn check_manifest(
    data: &Path,
    records: &[PlacementRecord],
    manifest: &SplitManifest,
) -> Result<()> {
    if file_sha256(data)? != manifest.dataset_sha256 || records.len() != manifest.records {
        return Err(CliError::input(
            data,
            "dataset does not match the split manifest the models were trained with",
        ));
    }
    let n = records.len();
    let s = &manifest.split;
    if s.train
        .iter()
        .chain(&s.validation)
        .chain(&s.test)
        .any(|&i| i >= n)
    {
        return Err(CliError::input(
            data,
            "split manifest indexes past the end of the dataset",
        ));
    }
    Ok(())
}

fn check_provenance(models: &[ModelFile; 3], manifest: &SplitManifest, dir: &Path) -> Result<()> {
    for m in models {
        if m.training.dataset_sha256 != manifest.dataset_sha256
            || m.training.split_seed != manifest.split.seed
        {
            return Err(CliError::input(
                &model_path(dir, m.kind(), m.target),
                "model was trained on a different dataset or split than split.json",
            ));
        }
    }
    Ok(())
}

fn present_kinds(dir: &Path) -> Vec<ModelKind> {
    [ModelKind::Svr, ModelKind::Rfr]
        .into_iter()
        .filter(|k| Target::ALL.iter().any(|t| model_path(dir, *k, *t).exists()))
        .collect()
}

pub fn evaluate(
    data: &Path,
    models_dir: &Path,
    kind: Option<ModelKind>,
    common: &Common,
) -> Result<()> {
    let config = RunConfig::load(common.config.as_deref(), common.seed)?;
    let records = read_labeled(data)?;
    let manifest_path = models_dir.join(SPLIT_FILE);
    let manifest: SplitManifest = files::read_json(&manifest_path)?;
    check_manifest(data, &records, &manifest)?;
    let split = rebuild_split(&records, &manifest);

    let kinds = match kind {
        Some(k) => vec![k],
        None => present_kinds(models_dir),
    };
    if kinds.is_empty() {
        return Err(CliError::input(models_dir, "no model files found"));
    }

    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    let mut svr_config = None;
    let mut forest_config = None;
    for kind in kinds {
        let files = load_models(models_dir, kind)?;
        check_provenance(&files, &manifest, models_dir)?;
        let [a, b, c] = files.map(|f| f.model);
        let models = [a, b, c];
        for m in &models {
            match m {
                RegressionModel::Svr(s) => svr_config = Some(s.config),
                RegressionModel::Rfr(f) => forest_config = Some(f.config),
            }
        }
        rows.extend(evaluate_models(kind, &models, &split)?);
        for (model, target) in models.iter().zip(Target::ALL) {
            let parts: [(&str, &[usize], &[PlacementRecord]); 3] = [
                ("train", &split.indices.train, &split.train),
                ("validation", &split.indices.validation, &split.validation),
                ("test", &split.indices.test, &split.test),
            ];
            for (name, index, part) in parts {
                let predictions = predict_all(model, part)?;
                for ((row, record), p) in index.iter().zip(part).zip(predictions) {
                    let truth = record.target(target)?;
                    residuals.push(vec![
                        kind.name().to_string(),
                        target.name().to_string(),
                        name.to_string(),
                        row.to_string(),
                        truth.to_string(),
                        p.to_string(),
                        (truth - p).to_string(),
                    ]);
                }
            }
        }
    }
    let (train_size, validation_size, test_size) = split.sizes();
    let report = EvalReport {
        seed: manifest.split.seed,
        train_size,
        validation_size,
        test_size,
        svr_config,
        forest_config,
        rows,
    };
    let text = crate::report::render(&report);
    ensure_dir(&common.out)?;
    write_json(&common.out.join(REPORT_JSON), &report)?;
    write_text(&common.out.join(REPORT_TEXT), &text)?;
    write_csv(
        &common.out.join(RESIDUALS_FILE),
        &[
            "model",
            "target",
            "split",
            "row",
            "truth",
            "prediction",
            "residual",
        ],
        &residuals,
    )?;
    let mut inputs = vec![InputFile::new(data)?, InputFile::new(&manifest_path)?];
    inputs.extend(config_inputs(common)?);
    write_echo(
        &common.out,
        &ConfigEcho {
            command: "evaluate",
            version: env!("CARGO_PKG_VERSION"),
            inputs,
            options: serde_json::json!({
                "models": models_dir.display().to_string(),
                "model": kind.map(ModelKind::name),
            }),
            config: &config,
        },
    )?;
    print!("{text}");
    Ok(())
}

/// One optimization result, feasible or not.
#[derive(Debug, Clone, Serialize)]
pub struct Recommendation {
    /// Zero-based row in the context file.
    pub context: usize,
    pub comp_type: String,
    pub comp_size: f64,
    pub pad_gap: f64,
    pub feasible: bool,
    pub chi: Option<PlacementSetting>,
    /// Predicted (post_x, post_y, post_theta) at `chi`.
    pub predicted: Option<[f64; 3]>,
    pub objective: Option<f64>,
    pub feasibility: Option<Feasibility>,
    pub worst_constraint: String,
    pub worst_slack: f64,
    pub generation_found: Option<usize>,
    pub final_population_best: Option<f64>,
    pub evaluations: Option<usize>,
    pub in_reference_band: Option<bool>,
    pub thresholds: Thresholds,
    pub bounds: Bounds,
    pub trace: Option<String>,
}

fn trace_rows(outcome: &EsOutcome) -> Vec<Vec<String>> {
    outcome
        .trace
        .iter()
        .map(|g| {
            vec![
                g.generation.to_string(),
                g.best.to_string(),
                g.mean.to_string(),
                g.sigma_frac.to_string(),
                g.success_rate.to_string(),
            ]
        })
        .collect()
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

pub fn optimize(
    contexts: &Path,
    models_dir: &Path,
    kind: ModelKind,
    common: &Common,
) -> Result<()> {
    let config = RunConfig::load(common.config.as_deref(), common.seed)?;
    let records = read_records(contexts)?;
    if records.is_empty() {
        return Err(CliError::input(contexts, "no context rows"));
    }
    let files = load_models(models_dir, kind)?;
    let predictors: [&dyn Predictor; 3] = [&files[0].model, &files[1].model, &files[2].model];
    ensure_dir(&common.out)?;

    let mut recs = Vec::with_capacity(records.len());
    for (k, record) in records.iter().enumerate() {
        let base = NlpProblem::new(record.directory, record.paste, predictors)?;
        let thresholds = config.thresholds.apply(base.thresholds);
        let bounds = config.bounds.apply(base.bounds);
        let problem = base.with_thresholds(thresholds)?.with_bounds(bounds)?;
        let mut rec = Recommendation {
            context: k,
            comp_type: record.directory.component_type.code().to_string(),
            comp_size: record.directory.component_size.value(),
            pad_gap: record.directory.pad_gap.value(),
            feasible: false,
            chi: None,
            predicted: None,
            objective: None,
            feasibility: None,
            worst_constraint: String::new(),
            worst_slack: f64::NAN,
            generation_found: None,
            final_population_best: None,
            evaluations: None,
            in_reference_band: None,
            thresholds,
            bounds,
            trace: None,
        };
        match run_es(&problem, &config.es) {
            Ok(outcome) => {
                let best = outcome.best;
                let (constraint, slack) = best.feasibility.worst();
                let trace_name = format!("trace_{k}.csv");
                write_csv(
                    &common.out.join(&trace_name),
                    &["generation", "best", "mean", "sigma_frac", "success_rate"],
                    &trace_rows(&outcome),
                )?;
                let v = best.chi.to_array();
                rec.feasible = best.feasible;
                rec.chi = Some(best.chi);
                rec.predicted = best.feasibility.prediction;
                rec.objective = Some(best.objective_value);
                rec.feasibility = Some(best.feasibility);
                rec.worst_constraint = constraint.name().to_string();
                rec.worst_slack = slack;
                rec.generation_found = Some(best.generation_found);
                rec.final_population_best = Some(outcome.final_population_best.objective_value);
                rec.evaluations = Some(outcome.evaluations);
                rec.in_reference_band = Some(
                    v[0].abs() <= REFERENCE_BAND.0
                        && v[1].abs() <= REFERENCE_BAND.0
                        && v[2].abs() <= REFERENCE_BAND.1,
                );
                rec.trace = Some(trace_name);
            }
            Err(Error::Infeasible {
                constraint,
                worst_slack,
                ..
            }) => {
                rec.worst_constraint = constraint.to_string();
                rec.worst_slack = worst_slack;
            }
            Err(e) => return Err(e.into()),
        }
        recs.push(rec);
    }

    write_json(&common.out.join(RECOMMENDATIONS_JSON), &recs)?;
    let rows: Vec<Vec<String>> = recs
        .iter()
        .map(|r| {
            let chi = r.chi.map(|c| c.to_array());
            let f = r.feasibility;
            vec![
                r.context.to_string(),
                r.comp_type.clone(),
                r.comp_size.to_string(),
                r.feasible.to_string(),
                opt_cell(chi.map(|c| c[0])),
                opt_cell(chi.map(|c| c[1])),
                opt_cell(chi.map(|c| c[2])),
                opt_cell(r.predicted.map(|p| p[0])),
                opt_cell(r.predicted.map(|p| p[1])),
                opt_cell(r.predicted.map(|p| p[2])),
                opt_cell(r.objective),
                opt_cell(f.and_then(|f| f.slack_x)),
                opt_cell(f.and_then(|f| f.slack_y)),
                opt_cell(f.and_then(|f| f.slack_theta)),
                r.worst_constraint.clone(),
                r.worst_slack.to_string(),
            ]
        })
        .collect();
    write_csv(
        &common.out.join(RECOMMENDATIONS_CSV),
        &[
            "context",
            "comp_type",
            "comp_size",
            "feasible",
            "chi_x",
            "chi_y",
            "chi_theta",
            "pred_x",
            "pred_y",
            "pred_theta",
            "objective",
            "slack_x",
            "slack_y",
            "slack_theta",
            "worst_constraint",
            "worst_slack",
        ],
        &rows,
    )?;
    let mut inputs = vec![InputFile::new(contexts)?];
    for f in Target::ALL.map(|t| model_path(models_dir, kind, t)) {
        inputs.push(InputFile::new(&f)?);
    }
    inputs.extend(config_inputs(common)?);
    write_echo(
        &common.out,
        &ConfigEcho {
            command: "optimize",
            version: env!("CARGO_PKG_VERSION"),
            inputs,
            options: serde_json::json!({ "model": kind.name() }),
            config: &config,
        },
    )?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:>3} {:>4} {:>9} {:>9} {:>7} {:>10} {:>9} {:>9} {:>9}  {:<12} trace",
        "row",
        "part",
        "x (um)",
        "y (um)",
        "th (deg)",
        "obj (um)",
        "slack_x",
        "slack_y",
        "slack_th",
        "status"
    );
    for r in &recs {
        let chi = r.chi.map(|c| c.to_array());
        let f = r.feasibility;
        let status = if r.feasible {
            if r.in_reference_band == Some(true) {
                "ok"
            } else {
                "ok (wide)"
            }
        } else {
            "infeasible"
        };
        let _ = writeln!(
            text,
            "{:>3} {:>4} {:>9} {:>9} {:>7} {:>10} {:>9} {:>9} {:>9}  {:<12} {}",
            r.context,
            format!("{}{}", r.comp_type, r.comp_size),
            fmt_opt(chi.map(|c| c[0]), 2),
            fmt_opt(chi.map(|c| c[1]), 2),
            fmt_opt(chi.map(|c| c[2]), 3),
            fmt_opt(r.objective, 3),
            fmt_opt(f.and_then(|f| f.slack_x), 2),
            fmt_opt(f.and_then(|f| f.slack_y), 2),
            fmt_opt(f.and_then(|f| f.slack_theta), 3),
            status,
            r.trace.as_deref().unwrap_or("-"),
        );
    }
    print!("{text}");

    let infeasible: Vec<String> = recs
        .iter()
        .filter(|r| !r.feasible)
        .map(|r| {
            format!(
                "row {}: worst slack {} on {}",
                r.context, r.worst_slack, r.worst_constraint
            )
        })
        .collect();
    if !infeasible.is_empty() {
        return Err(CliError::Infeasible(format!(
            "no feasible placement for {} of {} contexts ({})",
            infeasible.len(),
            recs.len(),
            infeasible.join("; ")
        )));
    }
    Ok(())
}

pub fn predict(rows: &Path, models_dir: &Path, kind: ModelKind, out: Option<&Path>) -> Result<()> {
    let records = read_records(rows)?;
    let files = load_models(models_dir, kind)?;
    let mut table = Vec::with_capacity(records.len());
    for (k, record) in records.iter().enumerate() {
        let x = encode_features(record)?;
        let mut row = vec![k.to_string()];
        for f in &files {
            row.push(f.model.predict(x.as_slice())?.to_string());
        }
        table.push(row);
    }
    let header = ["row", "post_x", "post_y", "post_theta"];
    let mut w = csv::Writer::from_writer(std::io::stdout());
    let stdout_err =
        |e: csv::Error| CliError::io(Path::new("<stdout>"), std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(stdout_err)?;
    for row in &table {
        w.write_record(row).map_err(stdout_err)?;
    }
    w.flush()
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_csv(&dir.join(PREDICTIONS_FILE), &header, &table)?;
    }
    Ok(())
}

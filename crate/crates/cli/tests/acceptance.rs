//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::cell::RefCell;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smtplace_core::domain::{design_matrix, Target};
use smtplace_core::es::{optimize, EsConfig, EsOutcome};
use smtplace_core::forest::{fit_forest, fit_tree};
use smtplace_core::nlp::{compute_bounds, NlpProblem, Thresholds};
use smtplace_core::svr::fit_svr;
use smtplace_core::synth::generate_dataset;
use smtplace_core::{
    r_squared, rmse, run_benchmark, EvalReport, ForestConfig, GeneratorConfig, ModelKind,
    PlacementSetting, SvrConfig, TreeNode,
};

type Check = Result<String, String>;

thread_local! {
    /// Best-so-far traces of every ES run made by the checks.
    static TRACES: RefCell<Vec<Vec<f64>>> = const { RefCell::new(Vec::new()) };
}

fn record(outcome: &EsOutcome) {
    TRACES.with(|t| {
        t.borrow_mut()
            .push(outcome.trace.iter().map(|g| g.best).collect())
    });
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!(
            "runtime {:.2} s over the {limit_s} s limit",
            elapsed.as_secs_f64()
        )
    })
}

fn svr_fixtures() -> Vec<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..40)
        .map(|k| {
            let d = 1 + k % 2;
            let n = rng.random_range(2..=8);
            let slope: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xs: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let ys = xs
                .iter()
                .map(|x| {
                    slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                        + rng.random_range(-0.5..0.5)
                })
                .collect();
            (xs, ys)
        })
        .collect()
}

fn svr_optimality() -> Check {
    let start = Instant::now();
    let config = SvrConfig::default();
    let fixtures = svr_fixtures();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_kkt: f64 = 0.0;
    for (i, (xs, ys)) in fixtures.iter().enumerate() {
        let model = fit_svr(xs, ys, &config).map_err(|e| format!("fixture {i}: {e}"))?;
        worst_kkt = worst_kkt.max(model.kkt_violation);
        let fitted = common::svr_primal(
            &model.weight,
            model.bias,
            xs,
            ys,
            config.c_penalty,
            config.epsilon,
        );
        let flat = common::svr_grid_optimum(xs, ys, config.c_penalty, config.epsilon, 1.0, 0.0);
        let radius = (2.0 * flat).sqrt() + 0.01;
        let grid = common::svr_grid_optimum(xs, ys, config.c_penalty, config.epsilon, 0.01, radius);
        worst_gap = worst_gap.max(fitted - grid);
    }
    let elapsed = start.elapsed();
    ensure(worst_gap <= 1e-2, || {
        format!("primal exceeds grid optimum by {worst_gap:.3e}")
    })?;
    ensure(worst_kkt <= 1e-3, || {
        format!("KKT violation {worst_kkt:.3e}")
    })?;
    within(elapsed, 5.0)?;
    Ok(format!(
        "{} fixtures, max primal - grid {worst_gap:.2e}, max KKT {worst_kkt:.2e}, {:.2} s",
        fixtures.len(),
        elapsed.as_secs_f64()
    ))
}

fn svr_tube() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = [1.5, -0.75, 0.25];
    let mut draw = |n: usize| {
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| truth.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + 4.0)
            .collect();
        (xs, ys)
    };
    let (train_x, train_y) = draw(200);
    let (test_x, test_y) = draw(100);
    let config = SvrConfig {
        c_penalty: 1e3,
        ..SvrConfig::default()
    };
    let model = fit_svr(&train_x, &train_y, &config).map_err(|e| e.to_string())?;
    let predictions: Vec<f64> = test_x.iter().map(|x| model.predict(x).unwrap()).collect();
    let err = rmse(&predictions, &test_y).map_err(|e| e.to_string())?;
    ensure(err <= config.epsilon + 1e-3, || {
        format!("test RMSE {err:.6}")
    })?;
    Ok(format!(
        "test RMSE {err:.6} (limit {:.3})",
        config.epsilon + 1e-3
    ))
}

fn rfr_memorization() -> Check {
    let data = generate_dataset(&GeneratorConfig {
        records_per_type: 50,
        ..GeneratorConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let mut worst_r2: f64 = 0.0;
    for target in Target::ALL {
        let (x, y) = design_matrix(&data, target).map_err(|e| e.to_string())?;
        let config = ForestConfig {
            n_trees: 1,
            mtry: Some(x[0].len()),
            bootstrap: false,
            seed: 3,
        };
        let forest = fit_forest(&x, &y, &config).map_err(|e| e.to_string())?;
        let predictions: Vec<f64> = x.iter().map(|r| forest.predict(r).unwrap()).collect();
        let err = rmse(&predictions, &y).unwrap();
        ensure(err == 0.0, || format!("{target}: train RMSE {err:e}"))?;
        worst_r2 = worst_r2.max((r_squared(&predictions, &y).unwrap() - 1.0).abs());
    }
    ensure(worst_r2 <= 1e-9, || format!("|R2 - 1| = {worst_r2:e}"))?;
    Ok(format!(
        "{} rows x 3 targets: RMSE 0, max |R2 - 1| {worst_r2:.1e}",
        data.len()
    ))
}

fn rfr_split() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in 0..50 {
        let n = rng.random_range(2..=10);
        let xs: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..12) as f64 * 0.5)
            .collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        let tree = fit_tree(&rows, &ys, &mut ChaCha8Rng::seed_from_u64(0), 1)
            .map_err(|e| e.to_string())?;
        let agree = match (common::exhaustive_split_1d(&xs, &ys), &tree) {
            (None, TreeNode::Leaf { .. }) => true,
            (
                Some((t, _)),
                TreeNode::Split {
                    feature_index: 0,
                    threshold,
                    ..
                },
            ) => *threshold == t,
            _ => false,
        };
        ensure(agree, || format!("fixture {k}: xs {xs:?} ys {ys:?}"))?;
    }
    Ok("50/50 root splits equal the exhaustive optimum".into())
}

/// Frozen results on the default dataset: test RMSE for (SVR, RFR) and
/// RFR train R2, per target.
const BASELINE_RMSE: [[f64; 2]; 3] = [
    [22.682715367696833, 18.454397975043705],
    [18.374836069184386, 15.861304406423567],
    [2.143608938961846, 1.8030049208601597],
];
const BASELINE_RFR_R2: [f64; 3] = [0.9836331408270912, 0.9792433826117338, 0.9796224835552029];
const BASELINE_RTOL: f64 = 1e-6;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= BASELINE_RTOL * b.abs().max(1.0)
}

fn model_ordering() -> Check {
    let start = Instant::now();
    let data = generate_dataset(&GeneratorConfig::default()).map_err(|e| e.to_string())?;
    ensure(data.len() == 3960, || format!("{} records", data.len()))?;
    let report: EvalReport =
        run_benchmark(&data, &SvrConfig::default(), &ForestConfig::default(), 42)
            .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let row = |k, t| report.row(k, t).unwrap();
    let mut summary = Vec::new();
    let mut actual = Vec::new();
    let mut drifted = false;
    for (i, target) in Target::ALL.into_iter().enumerate() {
        let (svr, rfr) = (row(ModelKind::Svr, target), row(ModelKind::Rfr, target));
        let r2 = rfr.r2_train.unwrap();
        if target != Target::PostTheta {
            ensure(rfr.rmse_test < svr.rmse_test, || {
                format!(
                    "{target}: RFR {:.4} not below SVR {:.4}",
                    rfr.rmse_test, svr.rmse_test
                )
            })?;
        }
        ensure(r2 >= 0.80, || format!("{target}: RFR train R2 {r2:.4}"))?;
        drifted |= !(close(svr.rmse_test, BASELINE_RMSE[i][0])
            && close(rfr.rmse_test, BASELINE_RMSE[i][1])
            && close(r2, BASELINE_RFR_R2[i]));
        actual.push(format!(
            "{target} [{:?}, {:?}] {:?}",
            svr.rmse_test, rfr.rmse_test, r2
        ));
        summary.push(format!(
            "{target} {:.3}/{:.3} R2 {:.4}",
            svr.rmse_test, rfr.rmse_test, r2
        ));
    }
    ensure(!drifted, || {
        format!("drifted from frozen baseline: {}", actual.join("; "))
    })?;
    within(elapsed, 60.0)?;
    Ok(format!(
        "SVR/RFR test RMSE: {}; {:.2} s",
        summary.join(", "),
        elapsed.as_secs_f64()
    ))
}

fn nlp_arithmetic() -> Check {
    use common::{mean_paste, placement_stub, resistor_1005};
    let (fx, fy, ft) = (
        placement_stub([0.0; 3], 3.0),
        placement_stub([0.0; 3], 4.0),
        placement_stub([0.0; 3], 0.5),
    );
    let problem = NlpProblem::new(resistor_1005(), mean_paste(), [&fx, &fy, &ft])
        .map_err(|e| e.to_string())?;
    let value = problem
        .objective(&PlacementSetting::new(10.0, 20.0, 0.0))
        .map_err(|e| e.to_string())?;
    ensure(value == 5.0, || format!("objective {value}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let coeffs: [[f64; 3]; 3] = [(); 3].map(|_| [(); 3].map(|_| rng.random_range(-2.0..2.0)));
        let bias: [f64; 3] = [(); 3].map(|_| rng.random_range(-30.0..30.0));
        let stubs = [0, 1, 2].map(|i| placement_stub(coeffs[i], bias[i]));
        let tau = Thresholds {
            tau_theta: rng.random_range(0.5..5.0),
            tau_x: rng.random_range(5.0..150.0),
            tau_y: rng.random_range(5.0..150.0),
        };
        let problem = NlpProblem::new(
            resistor_1005(),
            mean_paste(),
            [&stubs[0], &stubs[1], &stubs[2]],
        )
        .and_then(|p| p.with_thresholds(tau))
        .map_err(|e| e.to_string())?;
        let b = problem.bounds;
        let v: [f64; 3] = [0, 1, 2].map(|d| rng.random_range(b.lower[d]..=b.upper[d]));
        let f: [f64; 3] =
            [0, 1, 2].map(|i| (0..3).map(|d| coeffs[i][d] * v[d]).sum::<f64>() + bias[i]);
        let verdict = problem
            .feasible(&PlacementSetting::new(v[0], v[1], v[2]))
            .map_err(|e| e.to_string())?;
        let hand = [
            tau.tau_x - f[0].abs(),
            tau.tau_y - f[1].abs(),
            tau.tau_theta - f[2].abs(),
        ];
        let got = [verdict.slack_x, verdict.slack_y, verdict.slack_theta];
        for (h, g) in hand.iter().zip(got) {
            let g = g.ok_or_else(|| format!("fixture {k}: slack missing"))?;
            worst = worst.max((h - g).abs());
        }
        ensure(verdict.feasible == hand.iter().all(|s| *s >= 0.0), || {
            format!("fixture {k}: verdict")
        })?;
    }
    ensure(worst <= 1e-12, || format!("slack error {worst:e}"))?;
    Ok(format!(
        "objective (3, 4) -> 5 exactly; 20 slack fixtures, max error {worst:.1e}"
    ))
}

fn bounds_formulas() -> Check {
    let mut paste = common::mean_paste();
    paste.paste_offset_x1 = 404.0;
    paste.paste_offset_x2 = -216.0;
    let rounded = compute_bounds(&paste);
    ensure(rounded.upper[0] == 94.0 && rounded.lower[0] == 0.0, || {
        format!("U_chi1 {} on rounded means", rounded.upper[0])
    })?;

    let paste = common::mean_paste();
    let b = compute_bounds(&paste);
    // Hand computation: atan(-0.78 / 620.25) in degrees.
    let slope = -0.07205269562516627;
    let by_std = ((paste.paste_offset_y1 - paste.paste_offset_y2)
        / (paste.paste_offset_x1 - paste.paste_offset_x2))
        .atan()
        .to_degrees();
    ensure((b.upper[0] - 93.835).abs() <= 1e-12, || {
        format!("U_chi1 {}", b.upper[0])
    })?;
    ensure((b.upper[1] - 129.61).abs() <= 1e-12, || {
        format!("U_chi2 {}", b.upper[1])
    })?;
    ensure(
        (b.lower[2] - slope).abs() <= 1e-12 && (by_std - slope).abs() <= 1e-15,
        || format!("theta slope {} vs {slope}", b.lower[2]),
    )?;
    Ok(format!(
        "U_chi1 94.0 on rounded means; exact means give {:.3}, {:.2}, slope {:.6} deg",
        b.upper[0], b.upper[1], b.lower[2]
    ))
}

fn valid(problem: &NlpProblem<'_>, outcome: &EsOutcome) -> bool {
    let eval = problem.evaluate(&outcome.best.chi).unwrap();
    eval.feasibility.feasible
        && eval.feasibility.in_bounds
        && problem.bounds.contains(&outcome.best.chi)
}

fn es_ground_truth() -> Check {
    let stubs = common::identity_stubs();
    let problem = common::identity_problem(&stubs);
    let (mut hits, mut ok) = (0, 0);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let outcome = optimize(
            &problem,
            &EsConfig {
                seed,
                ..EsConfig::default()
            },
        )
        .map_err(|e| e.to_string())?;
        record(&outcome);
        ensure(outcome.trace.len() == 10, || {
            format!("{} generations", outcome.trace.len())
        })?;
        worst = worst.max(outcome.best.objective_value);
        hits += usize::from(outcome.best.objective_value <= 1.0);
        ok += usize::from(valid(&problem, &outcome));
    }
    ensure(hits >= 18, || format!("{hits}/20 seeds reached 1 um"))?;
    ensure(ok == 20, || {
        format!("{ok}/20 solutions feasible and in bounds")
    })?;
    Ok(format!(
        "{hits}/20 seeds <= 1 um (worst {worst:.3}); {ok}/20 feasible and in bounds"
    ))
}

fn es_vs_grid() -> Check {
    let start = Instant::now();
    let mut worst_margin = f64::NEG_INFINITY;
    for k in 0..10 {
        let (stubs, thresholds, bounds) = common::random_stub_problem(1000 + k);
        let problem = NlpProblem::new(
            common::resistor_1005(),
            common::mean_paste(),
            [&stubs[0], &stubs[1], &stubs[2]],
        )
        .and_then(|p| p.with_thresholds(thresholds))
        .and_then(|p| p.with_bounds(bounds))
        .map_err(|e| e.to_string())?;
        let (grid, _) = common::grid_optimum_2d(&problem);
        let tolerance = 0.05 * bounds.width(0).min(bounds.width(1));
        for seed in 0..20 {
            let outcome = optimize(
                &problem,
                &EsConfig {
                    seed,
                    ..EsConfig::default()
                },
            )
            .map_err(|e| e.to_string())?;
            record(&outcome);
            ensure(valid(&problem, &outcome), || {
                format!("problem {k} seed {seed}: invalid solution")
            })?;
            let margin = outcome.best.objective_value - grid;
            ensure(margin <= tolerance, || {
                format!("problem {k} seed {seed}: {margin:.3} over grid")
            })?;
            worst_margin = worst_margin.max(margin);
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 30.0)?;
    Ok(format!(
        "200 runs, worst ES - grid {worst_margin:.3} (limit 5.0); {:.2} s",
        elapsed.as_secs_f64()
    ))
}

struct Pipelines {
    _dir: tempfile::TempDir,
    a: std::path::PathBuf,
    b: std::path::PathBuf,
    codes: (Option<i32>, Option<i32>),
}

fn run_pipelines() -> Pipelines {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let codes = (support::pipeline(&a, "660"), support::pipeline(&b, "660"));
    Pipelines {
        _dir: dir,
        a,
        b,
        codes,
    }
}

fn determinism(p: &Pipelines) -> Check {
    ensure(p.codes.0 == p.codes.1, || {
        format!("optimize exit codes {:?}", p.codes)
    })?;
    let diff = support::tree_diff(&p.a, &p.b);
    ensure(diff.is_empty(), || format!("outputs differ: {diff:?}"))?;
    Ok(format!(
        "generate/train/evaluate/optimize reruns: {} files byte-identical",
        support::tree(&p.a).len()
    ))
}

fn monotone_trace(p: &Pipelines) -> Check {
    let mut traces = TRACES.with(|t| t.borrow().clone());
    for entry in fs::read_dir(p.a.join("opt")).unwrap() {
        let path = entry.unwrap().path();
        if path
            .file_name()
            .unwrap()
            .to_string_lossy()
            .starts_with("trace_")
        {
            let mut reader = csv::Reader::from_path(&path).unwrap();
            let best: Vec<f64> = reader
                .records()
                .map(|r| r.unwrap()[1].parse().unwrap())
                .collect();
            traces.push(best);
        }
    }
    for (i, t) in traces.iter().enumerate() {
        ensure(t.windows(2).all(|w| w[1] <= w[0]), || {
            format!("run {i} regressed: {t:?}")
        })?;
    }
    Ok(format!(
        "{} ES runs, best-so-far never increased",
        traces.len()
    ))
}

fn display_parity(p: &Pipelines) -> Check {
    let report: EvalReport =
        serde_json::from_slice(&fs::read(p.a.join("eval/report.json")).unwrap())
            .map_err(|e| e.to_string())?;
    for kind in [ModelKind::Svr, ModelKind::Rfr] {
        for target in Target::ALL {
            let row = report
                .row(kind, target)
                .ok_or_else(|| format!("missing {kind:?} {target}"))?;
            ensure(row.rmse_test.is_finite() && row.r2_train.is_some(), || {
                format!("{kind:?} {target} incomplete")
            })?;
        }
    }
    ensure(report.rows.len() == 6, || {
        format!("{} report rows", report.rows.len())
    })?;
    let recs = support::read_json(&p.a.join("opt/recommendations.json"));
    let recs = recs.as_array().ok_or("recommendations are not a list")?;
    ensure(recs.len() == 6, || {
        format!("{} recommendations", recs.len())
    })?;
    let mut feasible = 0;
    for r in recs {
        ensure(
            r["worst_slack"].is_number() && r["worst_constraint"].is_string(),
            || format!("context {} has no slack diagnostics", r["context"]),
        )?;
        if r["feasible"] == true {
            feasible += 1;
            for key in ["slack_x", "slack_y", "slack_theta"] {
                ensure(r["feasibility"][key].is_number(), || {
                    format!("context {} lacks {key}", r["context"])
                })?;
            }
        }
    }
    Ok(format!(
        "report grid 2 models x 3 targets x (RMSE, R2); 6 recommendations ({feasible} feasible) with slacks"
    ))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |name: &str, result: Check| match result {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(reason) => {
            failures += 1;
            println!("FAIL  {name}: {reason}");
        }
    };
    report("SVR optimality oracle", svr_optimality());
    report("SVR tube property", svr_tube());
    report("RFR memorization", rfr_memorization());
    report("RFR split oracle", rfr_split());
    report("Model ordering", model_ordering());
    report("NLP arithmetic", nlp_arithmetic());
    report("Bounds formulas", bounds_formulas());
    report("ES ground truth", es_ground_truth());
    report("ES vs grid oracle", es_vs_grid());
    let pipelines = run_pipelines();
    report("Determinism", determinism(&pipelines));
    report("Monotone trace", monotone_trace(&pipelines));
    report("Display parity", display_parity(&pipelines));
    if failures == 0 {
        println!("acceptance: 12/12 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 12 criteria failed");
        ExitCode::FAILURE
    }
}

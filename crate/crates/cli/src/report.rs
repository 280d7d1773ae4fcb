//! Text rendering of evaluation reports and per-record residuals.

use std::fmt::Write as _;

use smtplace_core::eval::{EvalReport, SplitScore};
use smtplace_core::{ModelKind, Target};

fn fmt_r2(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c == 0 {
                    format!("{cell:<w$}", w = widths[c])
                } else {
                    format!("{cell:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Headline layout: one row per model, RMSE (test) and R^2 (train) per
/// target, followed by every metric on every split.
pub fn render(report: &EvalReport) -> String {
    let mut text = String::new();
    let _ = writeln!(
        text,
        "Accuracy by model and target: RMSE on the test split, R2 on the training split"
    );
    let _ = writeln!(
        text,
        "split seed {}; train {}, validation {}, test {}",
        report.seed, report.train_size, report.validation_size, report.test_size
    );
    text.push('\n');

    let mut header = vec!["model".to_string()];
    for t in Target::ALL {
        header.push(format!("{t} RMSE ({})", t.unit()));
        header.push(format!("{t} R2"));
    }
    let mut rows = vec![header];
    for kind in [ModelKind::Svr, ModelKind::Rfr] {
        if !report.rows.iter().any(|r| r.model == kind) {
            continue;
        }
        let mut row = vec![kind.name().to_uppercase()];
        for t in Target::ALL {
            match report.row(kind, t) {
                Some(r) => {
                    row.push(format!("{:.4}", r.rmse_test));
                    row.push(fmt_r2(r.r2_train));
                }
                None => row.extend(["n/a".to_string(), "n/a".to_string()]),
            }
        }
        rows.push(row);
    }
    text.push_str(&aligned(&rows));

    text.push_str("\nAll splits\n");
    let mut diag = vec![vec![
        "model".to_string(),
        "target".to_string(),
        "split".to_string(),
        "RMSE".to_string(),
        "R2".to_string(),
    ]];
    for r in &report.rows {
        let splits: [(&str, &SplitScore); 3] = [
            ("train", &r.train),
            ("validation", &r.validation),
            ("test", &r.test),
        ];
        for (name, s) in splits {
            diag.push(vec![
                r.model.name().to_uppercase(),
                r.target.to_string(),
                name.to_string(),
                format!("{:.4}", s.rmse),
                fmt_r2(s.r2),
            ]);
        }
    }
    text.push_str(&aligned(&diag));
    text
}

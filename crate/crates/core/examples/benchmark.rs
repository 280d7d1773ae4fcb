//! Generates the default synthetic line and prints the SVR / forest benchmark.

use std::time::Instant;

use smtplace_core::synth::generate_dataset;
use smtplace_core::{run_benchmark, ForestConfig, GeneratorConfig, SvrConfig};

fn main() {
    let data = generate_dataset(&GeneratorConfig::default()).expect("generate");
    let start = Instant::now();
    let report = run_benchmark(&data, &SvrConfig::default(), &ForestConfig::default(), 42)
        .expect("benchmark");
    println!(
        "split {}/{}/{} in {:.1?}",
        report.train_size,
        report.validation_size,
        report.test_size,
        start.elapsed()
    );
    for row in &report.rows {
        println!(
            "{:4} {:11} rmse_test {:8.3}  r2_train {:.4}  r2_test {:.4}",
            row.model.name(),
            row.target.name(),
            row.rmse_test,
            row.r2_train.unwrap_or(f64::NAN),
            row.test.r2.unwrap_or(f64::NAN),
        );
    }
}

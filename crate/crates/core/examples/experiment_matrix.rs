//! Runs a small experiment matrix and writes its report files.
//!
//! `cargo run --release --example experiment_matrix [OUT_DIR]`

use std::path::PathBuf;

use specsim::engine::LockMode;
use specsim::experiments::{run_experiment, write_reports, Exclusion, ExperimentMatrix};
use specsim::workload::{generate, GenParams, HotContract};

fn main() {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("specsim-experiment-matrix"));
    let blocks = generate(&GenParams {
        blocks: 300,
        hot_contract: Some(HotContract::default()),
        ..Default::default()
    })
    .unwrap();
    let matrix = ExperimentMatrix {
        thread_counts: vec![16, 64],
        lock_modes: vec![LockMode::ReadWrite, LockMode::Mutex],
        predictor: vec![false, true],
        exclusions: vec![Exclusion::None, Exclusion::TopK(1)],
        ..Default::default()
    };
    let reports = run_experiment(&blocks, &matrix).unwrap();
    for (key, r) in &reports {
        println!(
            "{key:<48} {:>7.3} {:>7.3}",
            r.report.weighted_speedup, r.report.weighted_conflict_rate
        );
    }
    let index = write_reports(&out, &reports).unwrap();
    println!("wrote {}", index.display());
}

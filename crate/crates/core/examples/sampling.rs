//! How close does analyzing every 10th block get to analyzing all of them?

use specsim::engine::SimConfig;
use specsim::experiments::{run_experiment, Exclusion, ExperimentMatrix};
use specsim::workload::{generate, GenParams};

fn main() {
    let blocks = generate(&GenParams {
        blocks: 2000,
        seed: 9,
        ..Default::default()
    })
    .unwrap();
    let base = ExperimentMatrix::single(&SimConfig::default(), Exclusion::None);
    let mut full = None;
    for stride in [1, 2, 5, 10, 50] {
        let reports = run_experiment(
            &blocks,
            &ExperimentMatrix {
                stride,
                ..base.clone()
            },
        )
        .unwrap();
        let r = &reports.values().next().unwrap().report;
        let reference = *full.get_or_insert(r.weighted_speedup);
        println!(
            "stride {stride:>2}: {:>4} blocks, weighted speed-up {:.4} ({:+.2}%)",
            r.blocks,
            r.weighted_speedup,
            (r.weighted_speedup / reference - 1.0) * 100.0
        );
    }
}

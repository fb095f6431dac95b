//! Extra concurrent phases before the sequential one.

use specsim::engine::{compute_speedup, simulate_block, SimConfig};
use specsim::experiments::simulate_trace;
use specsim::fixtures::three_writers;
use specsim::metrics::aggregate;
use specsim::workload::{generate, GenParams};

fn main() {
    for phases in 1..=3 {
        let outcome = simulate_block(
            &three_writers(),
            &SimConfig {
                phases,
                ..SimConfig::with_threads(3)
            },
        );
        let costs: Vec<_> = outcome.phases.iter().map(|p| p.max_thread_cost()).collect();
        println!(
            "three writers, phases={phases}: phase costs {costs:?}, sequential {}, speed-up {}",
            outcome.sequential_cost,
            compute_speedup(&outcome)
        );
    }

    let blocks = generate(&GenParams {
        blocks: 300,
        seed: 42,
        ..Default::default()
    })
    .unwrap();
    let base = simulate_trace(&blocks, &SimConfig::default());
    for phases in 1..=3 {
        let run = simulate_trace(
            &blocks,
            &SimConfig {
                phases,
                ..Default::default()
            },
        );
        let worse = base
            .iter()
            .zip(&run)
            .filter(|(a, b)| b.speedup < a.speedup)
            .count();
        println!(
            "corpus phases={phases}: weighted speed-up {:.3}, {worse} blocks slower than one phase",
            aggregate(&run).weighted_speedup
        );
    }
}

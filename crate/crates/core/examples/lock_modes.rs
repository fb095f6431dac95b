//! Read-write locks against plain mutual exclusion.
//!
//! Two readers of one cell run in parallel under read-write locks but not
//! under a mutex. The same gap shows up on a synthetic corpus.

use specsim::engine::{compute_speedup, simulate_block, LockMode, SimConfig};
use specsim::experiments::simulate_trace;
use specsim::fixtures::m1;
use specsim::metrics::aggregate;
use specsim::workload::{generate, GenParams};

fn main() {
    for mode in [LockMode::ReadWrite, LockMode::Mutex] {
        let config = SimConfig {
            lock_mode: mode,
            ..SimConfig::with_threads(2)
        };
        println!(
            "M1 {mode:?}: speed-up {}",
            compute_speedup(&simulate_block(&m1(), &config))
        );
    }

    let blocks = generate(&GenParams {
        blocks: 200,
        write_ratio: 0.2,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    for mode in [LockMode::ReadWrite, LockMode::Mutex] {
        let r = aggregate(&simulate_trace(
            &blocks,
            &SimConfig {
                lock_mode: mode,
                ..Default::default()
            },
        ));
        println!(
            "corpus {mode:?}: weighted speed-up {:.3}, conflict rate {:.3}",
            r.weighted_speedup, r.weighted_conflict_rate
        );
    }
}

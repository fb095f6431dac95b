//! Speed-up against contention and against thread count.
//!
//! Prints a skew sweep at 16 threads, then a thread sweep on a busier corpus,
//! and writes the speed-up histogram of the baseline as CSV to stdout.

use specsim::engine::SimConfig;
use specsim::experiments::simulate_trace;
use specsim::metrics::{aggregate, write_speedup_csv};
use specsim::workload::{generate, GenParams, Spread};

fn main() {
    println!("skew  speed-up  conflict-rate  slower-than-sequential");
    for skew in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let blocks = generate(&GenParams {
            blocks: 200,
            contract_skew: skew,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        let r = aggregate(&simulate_trace(&blocks, &SimConfig::with_threads(16)));
        println!(
            "{skew:<5} {:<9.3} {:<14.3} {:.3}",
            r.weighted_speedup, r.weighted_conflict_rate, r.slowdown_fraction
        );
    }

    let busy = GenParams {
        blocks: 50,
        calls_per_block: Spread::fixed(200),
        contracts: 1000,
        keys_per_contract: 64,
        contract_skew: 0.5,
        seed: 1,
        ..Default::default()
    };
    let blocks = generate(&busy).unwrap();
    println!("\nthreads  speed-up");
    for t in [1, 4, 16, 32, 64, 128] {
        let r = aggregate(&simulate_trace(&blocks, &SimConfig::with_threads(t)));
        println!("{t:<8} {:.3}", r.weighted_speedup);
    }

    println!();
    let blocks = generate(&GenParams {
        blocks: 200,
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    write_speedup_csv(
        &aggregate(&simulate_trace(&blocks, &SimConfig::default())),
        std::io::stdout(),
    )
    .unwrap();
}

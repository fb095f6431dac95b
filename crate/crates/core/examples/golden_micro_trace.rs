//! Walks through the three-transaction block G1 on two threads.
//!
//! T1 writes `C1.k1` one tick after T2 has read it, so T1 aborts and is
//! replayed sequentially. Run with `cargo run --example golden_micro_trace`.

use specsim::engine::{compute_speedup, simulate_block, SimConfig};
use specsim::fixtures::g1;
use specsim::metrics::block_metrics;

fn main() {
    let block = g1();
    let config = SimConfig::with_threads(2);
    let outcome = simulate_block(&block, &config);

    let id = |i: &u32| block.transactions[*i as usize].id.as_str();
    let phase = &outcome.phases[0];
    println!(
        "concurrent bin: {:?}",
        phase.committed.iter().map(id).collect::<Vec<_>>()
    );
    println!(
        "sequential bin: {:?}",
        outcome.sequential_bin.iter().map(id).collect::<Vec<_>>()
    );
    println!("thread costs:   {:?}", phase.thread_cost);
    for c in &phase.conflicts {
        println!(
            "conflict at t={} on {}: {} aborted at op {}, holder {}",
            c.time,
            c.cell,
            id(&c.aborted_tx),
            c.op_position,
            id(&c.holder_tx)
        );
    }
    let s = compute_speedup(&outcome);
    println!(
        "speed-up: {s} = {:.4} (sequential {} / speculative)",
        s.value(),
        outcome.seq_baseline_cost
    );

    let predicted = simulate_block(
        &block,
        &SimConfig {
            predictor: true,
            ..config
        },
    );
    println!(
        "with a perfect conflict predictor: {}",
        compute_speedup(&predicted)
    );

    let m = block_metrics(&outcome);
    println!(
        "conflict rate {:.4}, hot-spots {:?}",
        m.conflict_rate(),
        m.conflicts_by_cell
    );
}

//! One contract draws 31% of all calls; find it and leave it out.

use specsim::engine::SimConfig;
use specsim::experiments::{apply_contract_filter, auto_top_k_exclusion, simulate_trace};
use specsim::metrics::aggregate;
use specsim::workload::{generate, hot_contract_address, GenParams, HotContract};

fn main() {
    let params = GenParams {
        blocks: 200,
        hot_contract: Some(HotContract::default()),
        seed: 5,
        ..Default::default()
    };
    let blocks = generate(&params).unwrap();
    let base = SimConfig::default();

    let before = aggregate(&simulate_trace(&blocks, &base));
    println!("top conflicting contracts:");
    for c in &before.top_contracts {
        let tag = if c.contract == hot_contract_address() {
            "  <- hot"
        } else {
            ""
        };
        println!("  {} {:>6}{tag}", c.contract, c.conflicts);
    }

    let excluded = auto_top_k_exclusion(&blocks, &base, 1);
    let after = aggregate(&simulate_trace(
        &apply_contract_filter(&blocks, &excluded),
        &base,
    ));
    println!(
        "weighted speed-up {:.3} -> {:.3}, conflict rate {:.3} -> {:.3}",
        before.weighted_speedup,
        after.weighted_speedup,
        before.weighted_conflict_rate,
        after.weighted_conflict_rate
    );
    println!(
        "cells with >= 5 conflicts: {:.3} -> {:.3} of conflicting cells",
        before.hotspot_tail_fraction(5),
        after.hotspot_tail_fraction(5)
    );
}

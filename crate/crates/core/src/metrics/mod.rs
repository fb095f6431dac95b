//! Per-block statistics and their aggregation into reports.
//!
//! Averages are weighted by the number of simulated contract calls in each
//! block, so blocks without calls carry no weight and are left out of the
//! speed-up distribution.

mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use report::{write_hotspot_csv, write_speedup_csv};

use crate::engine::{compute_speedup, BlockOutcome, Speedup};
use crate::trace::{Address, StorageCell};

/// Width of a speed-up histogram bin.
pub const BIN_WIDTH: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockMetrics {
    pub number: u64,
    pub speedup: Speedup,
    pub calls: usize,
    pub aborts: usize,
    pub conflicts_by_cell: BTreeMap<StorageCell, u64>,
    pub conflicts_by_contract: BTreeMap<Address, u64>,
}

impl BlockMetrics {
    pub fn conflict_rate(&self) -> f64 {
        if self.calls == 0 {
            0.0
        } else {
            self.aborts as f64 / self.calls as f64
        }
    }
}

/// Counts one conflict per event at the cell it happened on, across every
/// concurrent phase, and attributes it to the contract owning the cell.
pub fn block_metrics(outcome: &BlockOutcome) -> BlockMetrics {
    let mut by_cell = BTreeMap::new();
    let mut by_contract = BTreeMap::new();
    for ev in outcome.phases.iter().flat_map(|p| &p.conflicts) {
        *by_cell.entry(ev.cell).or_insert(0) += 1;
        *by_contract.entry(ev.cell.contract).or_insert(0) += 1;
    }
    BlockMetrics {
        number: outcome.block_number,
        speedup: compute_speedup(outcome),
        calls: outcome.calls,
        aborts: outcome.sequential_bin.len(),
        conflicts_by_cell: by_cell,
        conflicts_by_contract: by_contract,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    /// Speed-ups at or above this collapse into the last histogram bin.
    pub histogram_cap: f64,
    pub top_k: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            histogram_cap: 16.0,
            top_k: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupBin {
    pub low: f64,
    /// `None` for the overflow bin.
    pub high: Option<f64>,
    pub count: u64,
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HotspotBin {
    /// Conflicts a cell accumulated over the whole corpus.
    pub conflicts: u64,
    /// How many cells accumulated exactly that many.
    pub cells: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContractConflicts {
    pub contract: Address,
    pub conflicts: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub blocks: usize,
    /// Blocks with at least one simulated call.
    pub weighted_blocks: usize,
    pub calls: u64,
    pub aborts: u64,
    pub weighted_speedup: f64,
    pub weighted_conflict_rate: f64,
    pub slowdown_fraction: f64,
    /// Absent when no block carries weight.
    pub speedup_histogram: Option<Vec<SpeedupBin>>,
    pub hotspot_histogram: Vec<HotspotBin>,
    pub top_contracts: Vec<ContractConflicts>,
}

impl AggregateReport {
    /// Share of conflicting cells with at least `min_conflicts` conflicts.
    pub fn hotspot_tail_fraction(&self, min_conflicts: u64) -> f64 {
        let total: u64 = self.hotspot_histogram.iter().map(|b| b.cells).sum();
        if total == 0 {
            return 0.0;
        }
        let tail: u64 = self
            .hotspot_histogram
            .iter()
            .filter(|b| b.conflicts >= min_conflicts)
            .map(|b| b.cells)
            .sum();
        tail as f64 / total as f64
    }

    pub fn conflicting_cells(&self) -> u64 {
        self.hotspot_histogram.iter().map(|b| b.cells).sum()
    }
}

/// Mergeable partial aggregate. Merge order never changes the finished report.
#[derive(Clone, Debug, Default)]
pub struct Accumulator {
    // (speedup, calls, aborts) per block
    blocks: Vec<(Speedup, u64, u64)>,
    cells: BTreeMap<StorageCell, u64>,
    contracts: BTreeMap<Address, u64>,
}

impl Accumulator {
    pub fn push(&mut self, m: &BlockMetrics) {
        self.blocks
            .push((m.speedup, m.calls as u64, m.aborts as u64));
        for (cell, n) in &m.conflicts_by_cell {
            *self.cells.entry(*cell).or_insert(0) += n;
        }
        for (contract, n) in &m.conflicts_by_contract {
            *self.contracts.entry(*contract).or_insert(0) += n;
        }
    }

    pub fn merge(mut self, mut other: Accumulator) -> Accumulator {
        self.blocks.append(&mut other.blocks);
        for (cell, n) in other.cells {
            *self.cells.entry(cell).or_insert(0) += n;
        }
        for (contract, n) in other.contracts {
            *self.contracts.entry(contract).or_insert(0) += n;
        }
        self
    }

    pub fn finish(mut self, opts: &ReportOptions) -> AggregateReport {
        // Fixed summation order keeps floating-point results order-independent.
        self.blocks.sort_unstable();
        let weighted: Vec<_> = self.blocks.iter().filter(|b| b.1 > 0).collect();
        let calls: u64 = weighted.iter().map(|b| b.1).sum();
        let aborts: u64 = weighted.iter().map(|b| b.2).sum();
        let (weighted_speedup, weighted_conflict_rate, slowdown_fraction) = if calls == 0 {
            (1.0, 0.0, 0.0)
        } else {
            let s: f64 = weighted.iter().map(|b| b.0.value() * b.1 as f64).sum();
            let slow = weighted.iter().filter(|b| b.0 < Speedup::ONE).count();
            (
                s / calls as f64,
                aborts as f64 / calls as f64,
                slow as f64 / weighted.len() as f64,
            )
        };

        let speedup_histogram = (!weighted.is_empty()).then(|| {
            let cap_bin = (opts.histogram_cap / BIN_WIDTH).round() as u128;
            let mut counts: BTreeMap<u128, u64> = BTreeMap::new();
            for b in &weighted {
                let r = b.0.ratio();
                // exact floor(speedup / 0.25)
                let bin = (r.numer() * 4 / r.denom()).min(cap_bin);
                *counts.entry(bin).or_insert(0) += 1;
            }
            let last = *counts.keys().next_back().unwrap();
            let total = weighted.len() as f64;
            (0..=last)
                .map(|k| {
                    let count = counts.get(&k).copied().unwrap_or(0);
                    SpeedupBin {
                        low: k as f64 * BIN_WIDTH,
                        high: (k < cap_bin).then(|| (k + 1) as f64 * BIN_WIDTH),
                        count,
                        density: count as f64 / (total * BIN_WIDTH),
                    }
                })
                .collect()
        });

        let mut hot: BTreeMap<u64, u64> = BTreeMap::new();
        for &n in self.cells.values() {
            *hot.entry(n).or_insert(0) += 1;
        }

        AggregateReport {
            blocks: self.blocks.len(),
            weighted_blocks: weighted.len(),
            calls,
            aborts,
            weighted_speedup,
            weighted_conflict_rate,
            slowdown_fraction,
            speedup_histogram,
            hotspot_histogram: hot
                .into_iter()
                .map(|(conflicts, cells)| HotspotBin { conflicts, cells })
                .collect(),
            top_contracts: rank_contracts(&self.contracts, opts.top_k),
        }
    }
}

fn rank_contracts(totals: &BTreeMap<Address, u64>, k: usize) -> Vec<ContractConflicts> {
    let mut ranked: Vec<ContractConflicts> = totals
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(&contract, &conflicts)| ContractConflicts {
            contract,
            conflicts,
        })
        .collect();
    // byte order of an address equals the order of its hex form
    ranked.sort_by(|a, b| {
        b.conflicts
            .cmp(&a.conflicts)
            .then(a.contract.cmp(&b.contract))
    });
    ranked.truncate(k);
    ranked
}

pub fn aggregate(metrics: &[BlockMetrics]) -> AggregateReport {
    aggregate_with(metrics, &ReportOptions::default())
}

pub fn aggregate_with(metrics: &[BlockMetrics], opts: &ReportOptions) -> AggregateReport {
    let mut acc = Accumulator::default();
    for m in metrics {
        acc.push(m);
    }
    acc.finish(opts)
}

/// Contracts ranked by total conflicts, descending, ties broken by address.
///
/// # Panics
///
/// If `k` is zero.
pub fn top_conflicting_contracts(metrics: &[BlockMetrics], k: usize) -> Vec<ContractConflicts> {
    assert!(k >= 1, "k must be at least 1");
    let mut totals = BTreeMap::new();
    for m in metrics {
        for (contract, n) in &m.conflicts_by_contract {
            *totals.entry(*contract).or_insert(0) += n;
        }
    }
    rank_contracts(&totals, k)
}

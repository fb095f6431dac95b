//! Greedy speculative execution of one block.
//!
//! A block runs through one or more concurrent phases followed by a
//! sequential phase. Each concurrent phase starts with a fresh lock table and
//! takes as input the transactions the previous phase aborted; whatever the
//! last concurrent phase aborts is replayed one at a time at full cost.

mod lock;
mod phase;
mod speedup;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use lock::{Access, LockMode, LockOutcome, LockState, LockTable, TxIndex};
pub use phase::{AbortedWork, ConflictEvent, PhaseOutcome};
pub use speedup::{compute_speedup, Speedup};

use crate::error::{Error, Result};
use crate::trace::{Address, Block, Transaction};
use phase::{run_phase, Compiler, SimTx};

/// What a unit of work costs.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum CostProxy {
    #[default]
    #[serde(rename = "gas")]
    Gas,
    #[serde(rename = "instr")]
    Instructions,
}

/// How far an op advances its thread's virtual clock.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ClockMode {
    /// One tick per executed instruction.
    #[default]
    #[serde(rename = "instr")]
    Instructions,
    /// The op's cost under the configured proxy.
    #[serde(rename = "proxy")]
    Proxy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub threads: usize,
    pub lock_mode: LockMode,
    pub phases: usize,
    pub proxy: CostProxy,
    pub clock: ClockMode,
    /// Perfect conflict prediction: aborted work is free.
    pub predictor: bool,
    pub include_transfers: bool,
    pub excluded_contracts: BTreeSet<Address>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            threads: 16,
            lock_mode: LockMode::ReadWrite,
            phases: 1,
            proxy: CostProxy::Gas,
            clock: ClockMode::Instructions,
            predictor: false,
            include_transfers: false,
            excluded_contracts: BTreeSet::new(),
        }
    }
}

impl SimConfig {
    pub fn with_threads(threads: usize) -> Self {
        SimConfig {
            threads,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.phases == 0 {
            return Err(Error::Config("phases must be at least 1".into()));
        }
        Ok(())
    }

    /// Whether `tx` takes part in a simulation under this configuration.
    pub fn simulates(&self, tx: &Transaction) -> bool {
        (tx.is_call() || self.include_transfers) && !tx.touches_any(&self.excluded_contracts)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOutcome {
    pub block_number: u64,
    pub config: SimConfig,
    /// Indices of the transactions that took part, ascending.
    pub simulated: Vec<TxIndex>,
    /// How many of the simulated transactions are contract calls.
    pub calls: usize,
    pub phases: Vec<PhaseOutcome>,
    /// Aborted set of the last concurrent phase, in block order.
    pub sequential_bin: Vec<TxIndex>,
    pub sequential_cost: u64,
    /// Cost of running every simulated tx one at a time.
    pub seq_baseline_cost: u64,
}

/// Simulates `block` under `config`.
///
/// # Panics
///
/// If `config` fails [`SimConfig::validate`].
pub fn simulate_block(block: &Block, config: &SimConfig) -> BlockOutcome {
    config.validate().expect("invalid simulation config");
    let mut compiler = Compiler::default();
    let mut calls = 0;
    let txs: Vec<SimTx> = block
        .transactions
        .iter()
        .filter(|tx| config.simulates(tx))
        .map(|tx| {
            calls += usize::from(tx.is_call());
            compiler.compile(tx, config)
        })
        .collect();

    let mut phases = Vec::new();
    let mut input: Vec<&SimTx> = txs.iter().collect();
    for phase in 1..=config.phases as u32 {
        if input.is_empty() {
            break;
        }
        let outcome = run_phase(&input, &compiler.cells, config, phase);
        input.retain(|tx| outcome.aborted.binary_search(&tx.index).is_ok());
        phases.push(outcome);
    }

    BlockOutcome {
        block_number: block.number,
        config: config.clone(),
        simulated: txs.iter().map(|t| t.index).collect(),
        calls,
        phases,
        sequential_bin: input.iter().map(|t| t.index).collect(),
        sequential_cost: input.iter().map(|t| t.full_cost).sum(),
        seq_baseline_cost: txs.iter().map(|t| t.full_cost).sum(),
    }
}

/// Runs a single concurrent phase over `txs` (in block order), ignoring
/// `config.phases` and the transaction filters.
pub fn run_concurrent_phase(txs: &[Transaction], config: &SimConfig) -> PhaseOutcome {
    config.validate().expect("invalid simulation config");
    let mut compiler = Compiler::default();
    let compiled: Vec<SimTx> = txs.iter().map(|tx| compiler.compile(tx, config)).collect();
    let refs: Vec<&SimTx> = compiled.iter().collect();
    run_phase(&refs, &compiler.cells, config, 1)
}

#[cfg(test)]
mod tests;

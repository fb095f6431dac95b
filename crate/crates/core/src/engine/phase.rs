//! Discrete-event run of one concurrent phase.
//!
//! Threads pull transactions from a shared queue in block order. Each op
//! occupies its thread for a clock weight; op events are processed in
//! ascending `(virtual time, tx index)` order. A storage op takes its lock at
//! its event time; a refused lock aborts the transaction on the spot, and the
//! thread goes idle once the conflicting op's weight has elapsed.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::lock::{Access, LockOutcome, LockTable, TxIndex};
use super::{ClockMode, CostProxy, SimConfig};
use crate::trace::{Op, StorageCell, Transaction};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictEvent {
    pub cell: StorageCell,
    pub aborted_tx: TxIndex,
    pub holder_tx: TxIndex,
    /// 1-based concurrent phase number.
    pub phase: u32,
    /// Offset of the refused op within the aborted transaction's op list.
    pub op_position: u32,
    /// Virtual time of the refused request.
    pub time: u64,
}

/// Work an aborted transaction performed before it was rolled back.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortedWork {
    pub tx: TxIndex,
    pub thread: u32,
    pub partial_cost: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseOutcome {
    /// Ascending tx indices.
    pub committed: Vec<TxIndex>,
    /// Ascending tx indices.
    pub aborted: Vec<TxIndex>,
    /// Proxy cost each simulated thread accumulated, committed and aborted work alike.
    pub thread_cost: Vec<u64>,
    /// One entry per aborted tx, ascending by tx.
    pub aborted_partial_cost: Vec<AbortedWork>,
    pub conflicts: Vec<ConflictEvent>,
}

impl PhaseOutcome {
    pub fn max_thread_cost(&self) -> u64 {
        self.thread_cost.iter().copied().max().unwrap_or(0)
    }

    /// Thread costs with every aborted transaction's partial work removed.
    pub fn committed_thread_cost(&self) -> Vec<u64> {
        let mut costs = self.thread_cost.clone();
        for w in &self.aborted_partial_cost {
            costs[w.thread as usize] -= w.partial_cost;
        }
        costs
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Step {
    pub access: Option<(u32, Access)>,
    pub cost: u64,
    pub weight: u64,
    pub op_position: u32,
}

/// A transaction lowered to cost/weight steps with interned cell ids.
#[derive(Clone, Debug)]
pub(crate) struct SimTx {
    pub index: TxIndex,
    pub steps: Vec<Step>,
    pub full_cost: u64,
}

/// Lowers transactions for one configuration, interning cells block-locally.
#[derive(Default)]
pub(crate) struct Compiler {
    ids: HashMap<StorageCell, u32>,
    pub cells: Vec<StorageCell>,
}

impl Compiler {
    fn intern(&mut self, cell: StorageCell) -> u32 {
        *self.ids.entry(cell).or_insert_with(|| {
            self.cells.push(cell);
            (self.cells.len() - 1) as u32
        })
    }

    pub fn compile(&mut self, tx: &Transaction, config: &SimConfig) -> SimTx {
        let weight_of = |cost: u64, instructions: u64| match config.clock {
            ClockMode::Instructions => instructions,
            ClockMode::Proxy => cost,
        };
        let steps: Vec<Step> = if tx.is_call() {
            tx.ops
                .iter()
                .enumerate()
                .map(|(pos, op)| {
                    let cost = match config.proxy {
                        CostProxy::Gas => op.gas(),
                        CostProxy::Instructions => op.instructions(),
                    };
                    let access = match *op {
                        Op::Read { cell, .. } => Some((self.intern(cell), Access::Read)),
                        Op::Write { cell, .. } => Some((self.intern(cell), Access::Write)),
                        Op::Other { .. } => None,
                    };
                    Step {
                        access,
                        cost,
                        weight: weight_of(cost, op.instructions()),
                        op_position: pos as u32,
                    }
                })
                .collect()
        } else {
            // A value transfer is one opaque unit of work with no storage access.
            let cost = match config.proxy {
                CostProxy::Gas => tx.gas_total,
                CostProxy::Instructions => tx.instr_total,
            };
            vec![Step {
                access: None,
                cost,
                weight: weight_of(cost, tx.instr_total),
                op_position: 0,
            }]
        };
        let full_cost = steps.iter().map(|s| s.cost).sum();
        SimTx {
            index: tx.index,
            steps,
            full_cost,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    /// The thread finished its previous tx and pulls the next one.
    Idle {
        thread: u32,
    },
    Op,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Event {
    time: u64,
    /// Position in the phase input; ordered like the tx index.
    slot: usize,
    kind: EventKind,
}

struct Running {
    thread: u32,
    next_step: usize,
    cost: u64,
}

/// Runs one concurrent phase over `txs`, which must be in block order.
pub(crate) fn run_phase(
    txs: &[&SimTx],
    cells: &[StorageCell],
    config: &SimConfig,
    phase: u32,
) -> PhaseOutcome {
    let mut out = PhaseOutcome {
        thread_cost: vec![0; config.threads],
        ..Default::default()
    };
    let mut table = LockTable::<u32>::new(config.lock_mode);
    let mut running: Vec<Option<Running>> = txs.iter().map(|_| None).collect();
    let mut heap: BinaryHeap<Reverse<Event>> = BinaryHeap::new();
    let mut next = 0usize;

    // Hands the next queued tx to `thread` at `time`. Empty txs commit at once.
    let pull = |thread: u32,
                time: u64,
                next: &mut usize,
                running: &mut [Option<Running>],
                heap: &mut BinaryHeap<Reverse<Event>>,
                committed: &mut Vec<TxIndex>| {
        while *next < txs.len() {
            let slot = *next;
            *next += 1;
            if txs[slot].steps.is_empty() {
                committed.push(txs[slot].index);
                continue;
            }
            running[slot] = Some(Running {
                thread,
                next_step: 0,
                cost: 0,
            });
            heap.push(Reverse(Event {
                time,
                slot,
                kind: EventKind::Op,
            }));
            return;
        }
    };

    for thread in 0..config.threads as u32 {
        pull(
            thread,
            0,
            &mut next,
            &mut running,
            &mut heap,
            &mut out.committed,
        );
    }

    while let Some(Reverse(ev)) = heap.pop() {
        if let EventKind::Idle { thread } = ev.kind {
            pull(
                thread,
                ev.time,
                &mut next,
                &mut running,
                &mut heap,
                &mut out.committed,
            );
            continue;
        }
        let tx = txs[ev.slot];
        let run = running[ev.slot]
            .as_mut()
            .expect("op event for a tx that is not running");
        let step = tx.steps[run.next_step];
        run.cost += step.cost;
        out.thread_cost[run.thread as usize] += step.cost;
        let done_at = ev.time + step.weight;

        if let Some((cell, access)) = step.access {
            if let LockOutcome::Conflict { holder } = table.request(cell, access, tx.index) {
                out.aborted.push(tx.index);
                out.aborted_partial_cost.push(AbortedWork {
                    tx: tx.index,
                    thread: run.thread,
                    partial_cost: run.cost,
                });
                out.conflicts.push(ConflictEvent {
                    cell: cells[cell as usize],
                    aborted_tx: tx.index,
                    holder_tx: holder,
                    phase,
                    op_position: step.op_position,
                    time: ev.time,
                });
                let thread = run.thread;
                heap.push(Reverse(Event {
                    time: done_at,
                    slot: ev.slot,
                    kind: EventKind::Idle { thread },
                }));
                continue;
            }
        }

        run.next_step += 1;
        if run.next_step == tx.steps.len() {
            out.committed.push(tx.index);
            let thread = run.thread;
            heap.push(Reverse(Event {
                time: done_at,
                slot: ev.slot,
                kind: EventKind::Idle { thread },
            }));
        } else {
            heap.push(Reverse(Event {
                time: done_at,
                slot: ev.slot,
                kind: EventKind::Op,
            }));
        }
    }
    table.end_phase();

    out.committed.sort_unstable();
    out.aborted.sort_unstable();
    out.aborted_partial_cost.sort_unstable_by_key(|w| w.tx);
    out
}

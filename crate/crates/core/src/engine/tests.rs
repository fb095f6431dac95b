use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_rational::Ratio;
use proptest::prelude::*;

use super::*;
use crate::fixtures::{cell_c1_k1, g1, independent_calls, m1, three_writers};
use crate::trace::{derive_access_sets, sets_conflict, Op, StorageCell, Word};

fn config(threads: usize) -> SimConfig {
    SimConfig::with_threads(threads)
}

#[test]
fn g1_phase_matches_hand_stepped_schedule() {
    let block = g1();
    let phase = run_concurrent_phase(&block.transactions, &config(2));
    assert_eq!(phase.committed, vec![1, 2]);
    assert_eq!(phase.aborted, vec![0]);
    assert_eq!(phase.thread_cost, vec![35, 10]);
    assert_eq!(
        phase.aborted_partial_cost,
        vec![AbortedWork {
            tx: 0,
            thread: 0,
            partial_cost: 25
        }]
    );
    assert_eq!(
        phase.conflicts,
        vec![ConflictEvent {
            cell: cell_c1_k1(),
            aborted_tx: 0,
            holder_tx: 1,
            phase: 1,
            op_position: 1,
            time: 1,
        }]
    );
}

#[test]
fn g1_block_outcome_and_speedups() {
    let outcome = simulate_block(&g1(), &config(2));
    assert_eq!(outcome.sequential_bin, vec![0]);
    assert_eq!(outcome.sequential_cost, 30);
    assert_eq!(outcome.seq_baseline_cost, 50);
    assert_eq!(outcome.calls, 3);
    assert_eq!(compute_speedup(&outcome).ratio(), Ratio::new(50, 65));

    let predicted = simulate_block(
        &g1(),
        &SimConfig {
            predictor: true,
            ..config(2)
        },
    );
    assert_eq!(
        predicted.phases, outcome.phases,
        "predictor must not change the bins"
    );
    assert_eq!(compute_speedup(&predicted).ratio(), Ratio::new(5, 4));
}

#[test]
fn lone_call_commits() {
    let mut block = g1();
    block.transactions.truncate(1);
    let outcome = simulate_block(&block, &config(4));
    assert_eq!(outcome.phases[0].committed, vec![0]);
    assert!(outcome.sequential_bin.is_empty());
    assert_eq!(compute_speedup(&outcome), Speedup::ONE);
}

#[test]
fn three_writers_two_phases() {
    let cfg = SimConfig {
        phases: 2,
        ..config(3)
    };
    let outcome = simulate_block(&three_writers(), &cfg);
    assert_eq!(outcome.phases.len(), 2);
    assert_eq!(outcome.phases[0].committed, vec![0]);
    assert_eq!(outcome.phases[0].aborted, vec![1, 2]);
    assert_eq!(outcome.phases[1].committed, vec![1]);
    assert_eq!(outcome.sequential_bin, vec![2]);
    let denominator: u64 = outcome
        .phases
        .iter()
        .map(PhaseOutcome::max_thread_cost)
        .sum::<u64>()
        + outcome.sequential_cost;
    assert_eq!(denominator, 90);
    assert_eq!(compute_speedup(&outcome).ratio(), Ratio::new(60, 90));

    let single = simulate_block(&three_writers(), &config(3));
    assert_eq!(compute_speedup(&single).ratio(), Ratio::new(60, 80));
}

#[test]
fn m1_read_sharing() {
    let rw = simulate_block(&m1(), &config(2));
    let mx = simulate_block(
        &m1(),
        &SimConfig {
            lock_mode: LockMode::Mutex,
            ..config(2)
        },
    );
    assert_eq!(compute_speedup(&rw).ratio(), Ratio::from_integer(2));
    assert_eq!(compute_speedup(&mx).ratio(), Ratio::from_integer(1));
}

#[test]
fn independent_calls_scale_with_threads() {
    let block = independent_calls(4, 10);
    let wide = run_concurrent_phase(&block.transactions, &config(4));
    assert_eq!(wide.thread_cost, vec![10, 10, 10, 10]);
    assert!(wide.conflicts.is_empty());
    let narrow = run_concurrent_phase(&block.transactions, &config(1));
    assert_eq!(narrow.thread_cost, vec![40]);
    assert!(narrow.conflicts.is_empty());
    assert_eq!(
        compute_speedup(&simulate_block(&block, &config(4))).ratio(),
        Ratio::from_integer(4)
    );
}

#[test]
fn transfers_are_dropped_unless_included() {
    let mut block = g1();
    block
        .transactions
        .push(Transaction::transfer("X", 3, 21000));
    let outcome = simulate_block(&block, &config(2));
    assert_eq!(outcome.simulated, vec![0, 1, 2]);
    let with = simulate_block(
        &block,
        &SimConfig {
            include_transfers: true,
            ..config(2)
        },
    );
    assert_eq!(with.simulated, vec![0, 1, 2, 3]);
    assert_eq!(with.calls, 3);
    assert_eq!(with.seq_baseline_cost, 50 + 21000);
}

#[test]
fn transfer_only_block_scores_one() {
    let block = Block::new(3, vec![Transaction::transfer("X", 0, 21000)]);
    let outcome = simulate_block(&block, &config(2));
    assert!(outcome.simulated.is_empty());
    assert_eq!(compute_speedup(&outcome), Speedup::ONE);
}

#[test]
fn excluded_contracts_are_not_simulated() {
    let cfg = SimConfig {
        excluded_contracts: [crate::fixtures::contract_c1()].into_iter().collect(),
        ..config(2)
    };
    let outcome = simulate_block(&g1(), &cfg);
    assert_eq!(outcome.simulated, vec![2]);
}

#[test]
fn proxy_clock_orders_by_cost() {
    // Under the proxy clock T1 reaches its write at t=5, after T2 read at t=0.
    let cfg = SimConfig {
        clock: ClockMode::Proxy,
        ..config(2)
    };
    let outcome = simulate_block(&g1(), &cfg);
    assert_eq!(outcome.sequential_bin, vec![0]);
    assert_eq!(outcome.phases[0].conflicts[0].time, 5);
}

#[test]
fn instruction_proxy_costs() {
    let cfg = SimConfig {
        proxy: CostProxy::Instructions,
        ..config(2)
    };
    let outcome = simulate_block(&g1(), &cfg);
    // T1 = 3 instructions, T2 = 2, T3 = 2; T1 aborts after 2.
    assert_eq!(outcome.seq_baseline_cost, 7);
    assert_eq!(outcome.phases[0].thread_cost, vec![4, 2]);
    assert_eq!(compute_speedup(&outcome).ratio(), Ratio::new(7, 7));
}

// --- independent tick-by-tick oracle -------------------------------------

/// Steps virtual time one tick at a time with its own lock bookkeeping.
/// Only the instruction clock is supported.
struct TickOracle {
    committed: BTreeSet<u32>,
    aborted: BTreeSet<u32>,
    thread_cost: Vec<u64>,
}

fn tick_oracle(txs: &[Transaction], threads: usize, mutex: bool, gas: bool) -> TickOracle {
    #[derive(Clone)]
    struct Th {
        tx: Option<usize>,
        op: usize,
        busy_until: u64,
        last_tx: usize,
        done: bool, // current tx has finished or aborted
    }
    let cost = |op: &Op| if gas { op.gas() } else { op.instructions() };
    let mut readers: HashMap<StorageCell, BTreeSet<u32>> = HashMap::new();
    let mut writer: HashMap<StorageCell, u32> = HashMap::new();
    let mut th = vec![
        Th {
            tx: None,
            op: 0,
            busy_until: 0,
            last_tx: 0,
            done: true
        };
        threads
    ];
    let mut queue = 0usize;
    let mut res = TickOracle {
        committed: BTreeSet::new(),
        aborted: BTreeSet::new(),
        thread_cost: vec![0; threads],
    };
    let mut t = 0u64;
    let mut first = true;
    loop {
        // idle threads pull, ordered by the tx they just finished
        let mut idle: Vec<usize> = (0..threads)
            .filter(|&i| th[i].done && th[i].busy_until == t)
            .collect();
        if !first {
            idle.sort_by_key(|&i| th[i].last_tx);
        }
        first = false;
        for i in idle {
            th[i].tx = None;
            while queue < txs.len() {
                let q = queue;
                queue += 1;
                if txs[q].ops.is_empty() {
                    res.committed.insert(txs[q].index);
                    continue;
                }
                th[i] = Th {
                    tx: Some(q),
                    op: 0,
                    busy_until: t,
                    last_tx: q,
                    done: false,
                };
                break;
            }
        }
        let mut ready: Vec<usize> = (0..threads)
            .filter(|&i| th[i].tx.is_some() && !th[i].done && th[i].busy_until == t)
            .collect();
        ready.sort_by_key(|&i| th[i].tx);
        for i in ready {
            let q = th[i].tx.unwrap();
            let tx = &txs[q];
            let op = tx.ops[th[i].op];
            res.thread_cost[i] += cost(&op);
            th[i].busy_until = t + op.instructions();
            let me = tx.index;
            let ok = match op {
                Op::Read { cell, .. } | Op::Write { cell, .. } => {
                    let is_write = matches!(op, Op::Write { .. }) || mutex;
                    let w = writer.get(&cell).copied();
                    let rs = readers.entry(cell).or_default();
                    let others_read = rs.iter().any(|&r| r != me);
                    let other_writer = w.is_some_and(|w| w != me);
                    let ok = if is_write {
                        !other_writer && !others_read
                    } else {
                        !other_writer
                    };
                    if ok {
                        if is_write {
                            writer.insert(cell, me);
                        } else {
                            rs.insert(me);
                        }
                    }
                    ok
                }
                Op::Other { .. } => true,
            };
            if !ok {
                res.aborted.insert(me);
                th[i].done = true;
                continue;
            }
            th[i].op += 1;
            if th[i].op == tx.ops.len() {
                res.committed.insert(me);
                th[i].done = true;
            }
        }
        if queue == txs.len() && th.iter().all(|x| x.done) && th.iter().all(|x| x.busy_until <= t) {
            break;
        }
        t += 1;
    }
    res
}

#[test]
fn oracle_reproduces_g1() {
    let o = tick_oracle(&g1().transactions, 2, false, true);
    assert_eq!(o.committed, [1, 2].into());
    assert_eq!(o.aborted, [0].into());
    assert_eq!(o.thread_cost, vec![35, 10]);
}

fn arb_block() -> impl Strategy<Value = Block> {
    let op = prop_oneof![
        (0u64..3, 1u64..30).prop_map(|(k, g)| Op::Read {
            cell: StorageCell::new(crate::fixtures::contract_c1(), Word::from_u64(k)),
            gas: g
        }),
        (0u64..3, 1u64..30).prop_map(|(k, g)| Op::Write {
            cell: StorageCell::new(crate::fixtures::contract_c1(), Word::from_u64(k)),
            gas: g
        }),
        (0u64..30, 1u64..4).prop_map(|(g, n)| Op::Other {
            gas: g,
            instructions: n
        }),
    ];
    prop::collection::vec(prop::collection::vec(op, 0..6), 0..9).prop_map(|txs| {
        Block::new(
            1,
            txs.into_iter()
                .enumerate()
                .map(|(i, ops)| Transaction::call(format!("t{i}"), i as u32, ops))
                .collect(),
        )
    })
}

fn arb_config() -> impl Strategy<Value = SimConfig> {
    (
        1usize..5,
        any::<bool>(),
        1usize..4,
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(
            |(threads, mutex, phases, instr, proxy_clock, predictor)| SimConfig {
                threads,
                lock_mode: if mutex {
                    LockMode::Mutex
                } else {
                    LockMode::ReadWrite
                },
                phases,
                proxy: if instr {
                    CostProxy::Instructions
                } else {
                    CostProxy::Gas
                },
                clock: if proxy_clock {
                    ClockMode::Proxy
                } else {
                    ClockMode::Instructions
                },
                predictor,
                ..Default::default()
            },
        )
}

proptest! {
    #[test]
    fn engine_agrees_with_tick_oracle(block in arb_block(), threads in 1usize..5,
                                      mutex in any::<bool>(), gas in any::<bool>()) {
        let cfg = SimConfig {
            threads,
            lock_mode: if mutex { LockMode::Mutex } else { LockMode::ReadWrite },
            proxy: if gas { CostProxy::Gas } else { CostProxy::Instructions },
            ..Default::default()
        };
        let phase = run_concurrent_phase(&block.transactions, &cfg);
        let oracle = tick_oracle(&block.transactions, threads, mutex, gas);
        prop_assert_eq!(phase.committed.iter().copied().collect::<BTreeSet<_>>(), oracle.committed);
        prop_assert_eq!(phase.aborted.iter().copied().collect::<BTreeSet<_>>(), oracle.aborted);
        prop_assert_eq!(phase.thread_cost, oracle.thread_cost);
    }

    #[test]
    fn committed_sets_are_pairwise_conflict_free(block in arb_block(), cfg in arb_config()) {
        let outcome = simulate_block(&block, &cfg);
        let sets: BTreeMap<u32, _> = block.transactions.iter()
            .map(|t| (t.index, derive_access_sets(t))).collect();
        for phase in &outcome.phases {
            for (i, a) in phase.committed.iter().enumerate() {
                for b in &phase.committed[i + 1..] {
                    prop_assert!(!sets_conflict(&sets[a], &sets[b]), "{} and {} conflict", a, b);
                }
            }
        }
    }

    #[test]
    fn outcome_invariants(block in arb_block(), cfg in arb_config()) {
        let outcome = simulate_block(&block, &cfg);
        prop_assert_eq!(&outcome, &simulate_block(&block, &cfg));
        let mut input: Vec<u32> = outcome.simulated.clone();
        for phase in &outcome.phases {
            let mut all: Vec<u32> = phase.committed.iter().chain(&phase.aborted).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(&all, &input);
            prop_assert!(phase.committed.iter().all(|c| !phase.aborted.contains(c)));
            for ev in &phase.conflicts {
                prop_assert_ne!(ev.aborted_tx, ev.holder_tx);
            }
            input = phase.aborted.clone();
        }
        prop_assert_eq!(&outcome.sequential_bin, &input);
        let with = compute_speedup(&SimOutcomeExt::with_predictor(&outcome, true));
        let without = compute_speedup(&SimOutcomeExt::with_predictor(&outcome, false));
        prop_assert!(with >= without);
    }

    // The holder named by each conflict reached an access to the cell that is
    // incompatible with the refused one before it finished or aborted.
    #[test]
    fn conflict_holders_really_held_the_cell(block in arb_block(), cfg in arb_config()) {
        let outcome = simulate_block(&block, &cfg);
        for phase in &outcome.phases {
            for ev in &phase.conflicts {
                let refused = block.transactions[ev.aborted_tx as usize].ops[ev.op_position as usize];
                let holder_ops = &block.transactions[ev.holder_tx as usize].ops;
                let reached = phase.conflicts.iter()
                    .find(|c| c.aborted_tx == ev.holder_tx)
                    .map_or(holder_ops.len(), |c| c.op_position as usize);
                let incompatible = |op: &Op| op.cell() == Some(&ev.cell) && match (cfg.lock_mode, refused, op) {
                    (LockMode::Mutex, _, _) => true,
                    (_, Op::Read { .. }, Op::Read { .. }) => false,
                    _ => true,
                };
                prop_assert!(holder_ops[..reached].iter().any(incompatible),
                    "holder {} never took {:?}", ev.holder_tx, ev.cell);
            }
        }
    }

    #[test]
    fn conflict_free_blocks_scale_linearly(n in 1usize..12, threads in 1usize..8) {
        let outcome = simulate_block(&independent_calls(n, 10), &config(threads));
        let speedup = compute_speedup(&outcome).ratio();
        prop_assert_eq!(speedup, Ratio::new(n as u128, n.div_ceil(threads) as u128));
        if threads >= n || n % threads == 0 {
            prop_assert_eq!(speedup, Ratio::from_integer(threads.min(n) as u128));
        }
    }
}

/// Re-scores an outcome with the predictor flag forced.
trait SimOutcomeExt {
    fn with_predictor(&self, on: bool) -> BlockOutcome;
}

impl SimOutcomeExt for BlockOutcome {
    fn with_predictor(&self, on: bool) -> BlockOutcome {
        let mut o = self.clone();
        o.config.predictor = on;
        o
    }
}

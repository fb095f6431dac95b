//! Hand-sized blocks with fully worked outcomes, used by tests and examples.

use crate::trace::{Address, Block, Op, StorageCell, Transaction, Word};

pub fn contract_c1() -> Address {
    Address::from_low_u64(0xc1)
}

/// `C1.k1`, the cell every micro-trace contends on.
pub fn cell_c1_k1() -> StorageCell {
    StorageCell::new(contract_c1(), Word::from_u64(1))
}

/// Three calls on two threads: T1 writes `C1.k1` one tick after T2 read it,
/// so T1 aborts; T3 is independent.
///
/// With 2 threads, read-write locks, gas cost and instruction clock, the
/// committed bin is {T2, T3}, T1 is replayed, and the speed-up is 50/65.
pub fn g1() -> Block {
    let c = cell_c1_k1();
    Block::new(
        1,
        vec![
            Transaction::call(
                "T1",
                0,
                vec![
                    Op::Other {
                        gas: 5,
                        instructions: 1,
                    },
                    Op::Write { cell: c, gas: 20 },
                    Op::Other {
                        gas: 5,
                        instructions: 1,
                    },
                ],
            ),
            Transaction::call(
                "T2",
                1,
                vec![
                    Op::Read { cell: c, gas: 2 },
                    Op::Other {
                        gas: 8,
                        instructions: 1,
                    },
                ],
            ),
            Transaction::call(
                "T3",
                2,
                vec![Op::Other {
                    gas: 10,
                    instructions: 2,
                }],
            ),
        ],
    )
}

/// Two single-read calls on the same cell.
pub fn m1() -> Block {
    let c = cell_c1_k1();
    Block::new(
        1,
        vec![
            Transaction::call("R1", 0, vec![Op::Read { cell: c, gas: 10 }]),
            Transaction::call("R2", 1, vec![Op::Read { cell: c, gas: 10 }]),
        ],
    )
}

/// Three calls, each a single write to the same cell, costing 10, 20 and 30 gas.
pub fn three_writers() -> Block {
    let c = cell_c1_k1();
    Block::new(
        1,
        [10, 20, 30]
            .into_iter()
            .enumerate()
            .map(|(i, gas)| {
                Transaction::call(format!("W{i}"), i as u32, vec![Op::Write { cell: c, gas }])
            })
            .collect(),
    )
}

/// `n` calls of `gas` each, touching pairwise distinct cells.
pub fn independent_calls(n: usize, gas: u64) -> Block {
    Block::new(
        1,
        (0..n)
            .map(|i| {
                let cell = StorageCell::new(contract_c1(), Word::from_u64(100 + i as u64));
                Transaction::call(format!("I{i}"), i as u32, vec![Op::Write { cell, gas }])
            })
            .collect(),
    )
}

use std::collections::BTreeSet;

use super::{Op, StorageCell, Transaction};

/// The cells a transaction reads and writes over its whole trace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccessSets {
    pub reads: BTreeSet<StorageCell>,
    pub writes: BTreeSet<StorageCell>,
}

pub fn derive_access_sets(tx: &Transaction) -> AccessSets {
    let mut sets = AccessSets::default();
    for op in &tx.ops {
        match *op {
            Op::Read { cell, .. } => {
                sets.reads.insert(cell);
            }
            Op::Write { cell, .. } => {
                sets.writes.insert(cell);
            }
            Op::Other { .. } => {}
        }
    }
    sets
}

/// Two access sets conflict when they share a cell and at least one side writes it.
pub fn sets_conflict(a: &AccessSets, b: &AccessSets) -> bool {
    a.writes
        .iter()
        .any(|c| b.reads.contains(c) || b.writes.contains(c))
        || b.writes.iter().any(|c| a.reads.contains(c))
}

//! Per-phase lock table keyed by storage location.
//!
//! Locks are never released while a phase runs, including those held by
//! transactions that have already aborted. A fresh table is used per phase.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::trace::StorageCell;

/// Position of a transaction within its block.
pub type TxIndex = u32;

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum LockMode {
    /// Shared reads, exclusive writes.
    #[default]
    #[serde(rename = "rw")]
    ReadWrite,
    /// Every access is exclusive.
    #[serde(rename = "mutex")]
    Mutex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Access {
    Read,
    Write,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LockOutcome {
    Granted,
    Conflict { holder: TxIndex },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LockState {
    /// Shared holders in acquisition order. Unused in mutex mode.
    pub readers: Vec<TxIndex>,
    /// Exclusive holder; in mutex mode, the only holder.
    pub writer: Option<TxIndex>,
}

#[derive(Clone, Debug)]
pub struct LockTable<K = StorageCell> {
    mode: LockMode,
    entries: HashMap<K, LockState>,
    frozen: bool,
}

impl<K: Eq + Hash> LockTable<K> {
    pub fn new(mode: LockMode) -> Self {
        LockTable {
            mode,
            entries: HashMap::new(),
            frozen: false,
        }
    }

    pub fn mode(&self) -> LockMode {
        self.mode
    }

    /// Requests `cell` for `tx`. On conflict the table is left unchanged and
    /// every lock the requester already holds stays held.
    ///
    /// # Panics
    ///
    /// If the table has been frozen by [`LockTable::end_phase`].
    pub fn request(&mut self, cell: K, access: Access, tx: TxIndex) -> LockOutcome {
        assert!(!self.frozen, "lock request after the phase ended");
        let state = self.entries.entry(cell).or_default();
        match self.mode {
            LockMode::Mutex => match state.writer {
                Some(holder) if holder != tx => LockOutcome::Conflict { holder },
                _ => {
                    state.writer = Some(tx);
                    LockOutcome::Granted
                }
            },
            LockMode::ReadWrite => match access {
                Access::Read => match state.writer {
                    Some(holder) if holder != tx => LockOutcome::Conflict { holder },
                    _ => {
                        if !state.readers.contains(&tx) {
                            state.readers.push(tx);
                        }
                        LockOutcome::Granted
                    }
                },
                Access::Write => {
                    if let Some(holder) = state.writer.filter(|&w| w != tx) {
                        return LockOutcome::Conflict { holder };
                    }
                    if let Some(&holder) = state.readers.iter().find(|&&r| r != tx) {
                        return LockOutcome::Conflict { holder };
                    }
                    state.writer = Some(tx);
                    LockOutcome::Granted
                }
            },
        }
    }

    pub fn holders(&self, cell: &K) -> Option<&LockState> {
        self.entries.get(cell)
    }

    /// Whether `tx` holds `cell` in a mode that would refuse `access` from someone else.
    pub fn blocks(&self, cell: &K, access: Access, tx: TxIndex) -> bool {
        let Some(state) = self.entries.get(cell) else {
            return false;
        };
        match (self.mode, access) {
            (LockMode::Mutex, _) | (LockMode::ReadWrite, Access::Write) => {
                state.writer == Some(tx) || state.readers.contains(&tx)
            }
            (LockMode::ReadWrite, Access::Read) => state.writer == Some(tx),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn end_phase(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }
}

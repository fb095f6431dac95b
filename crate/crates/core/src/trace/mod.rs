//! Canonical trace data model.
//!
//! A trace is an ordered list of [`Block`]s. Each block holds the transactions
//! it executed, and each contract call carries the storage accesses it made
//! interleaved with run-length-compressed spans of non-storage work. Storage
//! values are never modeled: only locations and costs matter for conflict
//! detection.

mod access;
mod codec;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use access::{derive_access_sets, sets_conflict, AccessSets};
pub use codec::{read_trace, read_trace_file, write_trace, write_trace_file};

use crate::error::Error;

/// Parses exactly `N` bytes from a lowercase or uppercase hex string of length `2 * N`.
fn parse_fixed_hex<const N: usize>(s: &str, what: &str) -> Result<[u8; N], String> {
    if s.len() != 2 * N {
        return Err(format!(
            "{what} must be {} hex chars, got {}",
            2 * N,
            s.len()
        ));
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(s, &mut out).map_err(|e| format!("{what} {s:?}: {e}"))?;
    Ok(out)
}

/// A 20-byte account address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    /// Builds an address whose low 8 bytes hold `n` big-endian.
    pub fn from_low_u64(n: u64) -> Self {
        let mut bytes = [0u8; 20];
        bytes[12..].copy_from_slice(&n.to_be_bytes());
        Address(bytes)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({self})")
    }
}

impl FromStr for Address {
    type Err = String;

    /// Accepts the canonical 40-char form, optionally `0x`-prefixed, any case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.strip_prefix("0x").unwrap_or(s);
        parse_fixed_hex::<20>(s, "address").map(Address)
    }
}

/// A 32-byte storage key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(pub [u8; 32]);

impl Word {
    pub fn from_u64(n: u64) -> Self {
        let mut bytes = [0u8; 32];
        bytes[24..].copy_from_slice(&n.to_be_bytes());
        Word(bytes)
    }

    /// Parses a hex word of at most 64 significant digits, left-padding with zeros.
    /// A `0x` prefix is optional.
    pub fn parse_padded(s: &str) -> Result<Self, String> {
        let digits = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .unwrap_or(s);
        if digits.is_empty() {
            return Err(format!("empty hex word {s:?}"));
        }
        let significant = digits.trim_start_matches('0');
        if significant.len() > 64 {
            return Err(format!("hex word {s:?} exceeds 32 bytes"));
        }
        if let Some(bad) = digits.chars().find(|c| !c.is_ascii_hexdigit()) {
            return Err(format!("invalid hex digit {bad:?} in {s:?}"));
        }
        let padded = format!("{significant:0>64}");
        parse_fixed_hex::<32>(&padded, "word").map(Word)
    }

    /// The low 20 bytes, i.e. the address an EVM stack word refers to.
    pub fn low_address(&self) -> Address {
        let mut bytes = [0u8; 20];
        bytes.copy_from_slice(&self.0[12..]);
        Address(bytes)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl FromStr for Word {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_fixed_hex::<32>(s, "key").map(Word)
    }
}

macro_rules! hex_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

hex_serde!(Address);
hex_serde!(Word);

/// A persistent-storage location: the unit of locking and of conflict.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StorageCell {
    pub contract: Address,
    pub key: Word,
}

impl StorageCell {
    pub fn new(contract: Address, key: Word) -> Self {
        StorageCell { contract, key }
    }
}

impl fmt::Display for StorageCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.contract, self.key)
    }
}

impl fmt::Debug for StorageCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StorageCell({self})")
    }
}

/// One step of a transaction trace.
///
/// `Read` and `Write` correspond to SLOAD and SSTORE and always count as a
/// single instruction. `Other` covers a span of non-storage bytecodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Read { cell: StorageCell, gas: u64 },
    Write { cell: StorageCell, gas: u64 },
    Other { gas: u64, instructions: u64 },
}

impl Op {
    pub fn gas(&self) -> u64 {
        match *self {
            Op::Read { gas, .. } | Op::Write { gas, .. } | Op::Other { gas, .. } => gas,
        }
    }

    pub fn instructions(&self) -> u64 {
        match *self {
            Op::Read { .. } | Op::Write { .. } => 1,
            Op::Other { instructions, .. } => instructions,
        }
    }

    pub fn cell(&self) -> Option<&StorageCell> {
        match self {
            Op::Read { cell, .. } | Op::Write { cell, .. } => Some(cell),
            Op::Other { .. } => None,
        }
    }
}

/// Wire form of an [`Op`]; field order is the canonical serialization order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpRecord {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contract: Option<Address>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    key: Option<Word>,
    gas: u64,
    n: u64,
}

impl Serialize for Op {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (kind, cell) = match self {
            Op::Read { cell, .. } => ("r", Some(cell)),
            Op::Write { cell, .. } => ("w", Some(cell)),
            Op::Other { .. } => ("o", None),
        };
        OpRecord {
            kind: kind.to_owned(),
            contract: cell.map(|c| c.contract),
            key: cell.map(|c| c.key),
            gas: self.gas(),
            n: self.instructions(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Op {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = OpRecord::deserialize(d)?;
        let cell = match (rec.contract, rec.key) {
            (Some(contract), Some(key)) => Some(StorageCell { contract, key }),
            (None, None) => None,
            _ => {
                return Err(D::Error::custom(
                    "op must carry both contract and key, or neither",
                ))
            }
        };
        match (rec.kind.as_str(), cell) {
            ("r" | "w", None) => Err(D::Error::custom("storage op without a cell")),
            ("r" | "w", Some(_)) if rec.n != 1 => Err(D::Error::custom(format!(
                "storage op must have n = 1, got {}",
                rec.n
            ))),
            ("r", Some(cell)) => Ok(Op::Read { cell, gas: rec.gas }),
            ("w", Some(cell)) => Ok(Op::Write { cell, gas: rec.gas }),
            ("o", Some(_)) => Err(D::Error::custom("non-storage op must not carry a cell")),
            ("o", None) if rec.n == 0 => Err(D::Error::custom("non-storage op must have n >= 1")),
            ("o", None) => Ok(Op::Other {
                gas: rec.gas,
                instructions: rec.n,
            }),
            (other, _) => Err(D::Error::custom(format!("unknown op kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TxKind {
    #[serde(rename = "call")]
    ContractCall,
    #[serde(rename = "transfer")]
    ValueTransfer,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub id: String,
    pub index: u32,
    pub kind: TxKind,
    pub gas_total: u64,
    pub instr_total: u64,
    pub ops: Vec<Op>,
}

impl Transaction {
    /// Builds a contract call, computing the totals from `ops`.
    pub fn call(id: impl Into<String>, index: u32, ops: Vec<Op>) -> Self {
        let gas_total = ops.iter().map(Op::gas).sum();
        let instr_total = ops.iter().map(Op::instructions).sum();
        Transaction {
            id: id.into(),
            index,
            kind: TxKind::ContractCall,
            gas_total,
            instr_total,
            ops,
        }
    }

    pub fn transfer(id: impl Into<String>, index: u32, gas: u64) -> Self {
        Transaction {
            id: id.into(),
            index,
            kind: TxKind::ValueTransfer,
            gas_total: gas,
            instr_total: 0,
            ops: Vec::new(),
        }
    }

    pub fn is_call(&self) -> bool {
        self.kind == TxKind::ContractCall
    }

    /// True if any storage op targets one of `contracts`.
    pub fn touches_any(&self, contracts: &BTreeSet<Address>) -> bool {
        !contracts.is_empty()
            && self
                .ops
                .iter()
                .filter_map(Op::cell)
                .any(|c| contracts.contains(&c.contract))
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.kind {
            TxKind::ContractCall => {
                let gas: u64 = self.ops.iter().map(Op::gas).sum();
                if gas != self.gas_total {
                    return Err(format!(
                        "gas_total {} != sum of op gas {gas}",
                        self.gas_total
                    ));
                }
                let instr: u64 = self.ops.iter().map(Op::instructions).sum();
                if instr != self.instr_total {
                    return Err(format!(
                        "instr_total {} != sum of op instructions {instr}",
                        self.instr_total
                    ));
                }
            }
            TxKind::ValueTransfer => {
                if !self.ops.is_empty() {
                    return Err("value transfer must not carry ops".into());
                }
                if self.instr_total != 0 {
                    return Err("value transfer must have instr_total 0".into());
                }
            }
        }
        if self.ops.iter().any(|op| {
            matches!(
                op,
                Op::Other {
                    instructions: 0,
                    ..
                }
            )
        }) {
            return Err("non-storage op with zero instructions".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub number: u64,
    pub transactions: Vec<Transaction>,
}

impl Block {
    pub fn new(number: u64, transactions: Vec<Transaction>) -> Self {
        Block {
            number,
            transactions,
        }
    }

    /// Checks index ordering and every transaction's invariants.
    pub fn validate(&self) -> Result<(), Error> {
        for (pos, tx) in self.transactions.iter().enumerate() {
            if tx.index as usize != pos {
                return Err(Error::Validation {
                    block: self.number,
                    tx: tx.id.clone(),
                    reason: format!("index {} at position {pos}", tx.index),
                });
            }
            tx.validate().map_err(|reason| Error::Validation {
                block: self.number,
                tx: tx.id.clone(),
                reason,
            })?;
        }
        Ok(())
    }

    pub fn call_count(&self) -> usize {
        self.transactions.iter().filter(|t| t.is_call()).count()
    }
}

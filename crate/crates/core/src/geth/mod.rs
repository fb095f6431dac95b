//! Conversion of client debug traces (`structLogs`) into canonical transactions.
//!
//! Storage accesses are attributed to the storage context executing them. The
//! converter keeps a stack of context addresses that follows the `depth` field
//! of the records: a call-type record names the context of the frame it opens,
//! and a depth decrease returns to the caller.
//!
//! A block is described by a sidecar JSON file listing its transactions in
//! order; each contract call points at the trace document captured for it:
//!
//! ```json
//! {
//!   "number": 4000000,
//!   "transactions": [
//!     {"id": "0xaa", "index": 0, "kind": "call", "to": "0x…", "trace": "0xaa.json"},
//!     {"id": "0xbb", "index": 1, "kind": "transfer", "gas": 21000}
//!   ]
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::trace::{Address, Block, Op, StorageCell, Transaction, TxKind, Word};

/// One executed bytecode, as emitted by the struct logger. Unknown fields
/// (memory, storage, refund, ...) are ignored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructLogRecord {
    pub pc: u64,
    pub op: String,
    pub gas: u64,
    #[serde(rename = "gasCost")]
    pub gas_cost: u64,
    pub depth: u64,
    /// Top of stack is the last element.
    #[serde(default)]
    pub stack: Vec<String>,
}

impl StructLogRecord {
    fn operand(&self, from_top: usize, txid: &str) -> Result<Word> {
        let raw = self
            .stack
            .len()
            .checked_sub(from_top + 1)
            .map(|i| &self.stack[i])
            .ok_or_else(|| {
                convert_err(
                    txid,
                    format!("pc {}: {} is missing a stack operand", self.pc, self.op),
                )
            })?;
        Word::parse_padded(raw).map_err(|e| convert_err(txid, format!("pc {}: {e}", self.pc)))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TraceDocument {
    Bare(Vec<StructLogRecord>),
    Direct {
        #[serde(rename = "structLogs")]
        struct_logs: Vec<StructLogRecord>,
    },
    Rpc {
        result: Box<TraceDocument>,
    },
}

impl TraceDocument {
    fn into_records(self) -> Vec<StructLogRecord> {
        match self {
            TraceDocument::Bare(r) | TraceDocument::Direct { struct_logs: r } => r,
            TraceDocument::Rpc { result } => result.into_records(),
        }
    }
}

/// Parses a trace document: `{"structLogs": [...]}`, a JSON-RPC response
/// wrapping one in `result`, or a bare record array.
pub fn parse_struct_logs(text: &str) -> Result<Vec<StructLogRecord>> {
    let doc: TraceDocument = serde_json::from_str(text)?;
    Ok(doc.into_records())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxEnvelope {
    pub id: String,
    pub index: u32,
    pub kind: TxKind,
    /// Recipient; required for contract calls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Address>,
    /// Gas used; required for value transfers, which carry no records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas: Option<u64>,
    /// Trace document of a contract call, relative to the sidecar file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSidecar {
    pub number: u64,
    pub transactions: Vec<TxEnvelope>,
}

fn convert_err(tx: &str, reason: impl Into<String>) -> Error {
    Error::Convert {
        tx: tx.to_owned(),
        reason: reason.into(),
    }
}

/// Deterministic stand-in for the address of the `n`-th contract created by `txid`.
pub fn synthetic_create_address(txid: &str, n: usize) -> Address {
    let digest = Sha256::digest(format!("create:{txid}:{n}").as_bytes());
    let mut a = [0u8; 20];
    a.copy_from_slice(&digest[..20]);
    Address(a)
}

#[derive(Default)]
struct OtherRun {
    gas: u64,
    n: u64,
}

impl OtherRun {
    fn flush(&mut self, ops: &mut Vec<Op>) {
        if self.n > 0 {
            ops.push(Op::Other {
                gas: self.gas,
                instructions: self.n,
            });
        }
        *self = OtherRun::default();
    }
}

/// Converts one transaction's records, given in execution order.
pub fn convert_tx(env: &TxEnvelope, records: &[StructLogRecord]) -> Result<Transaction> {
    let id = env.id.as_str();
    if env.kind == TxKind::ValueTransfer {
        if !records.is_empty() {
            return Err(convert_err(id, "value transfer with bytecode records"));
        }
        let gas = env
            .gas
            .ok_or_else(|| convert_err(id, "value transfer without gas"))?;
        return Ok(Transaction::transfer(id, env.index, gas));
    }
    let to = env
        .to
        .ok_or_else(|| convert_err(id, "contract call without recipient"))?;

    let mut contexts = vec![to];
    let mut pending: Option<Address> = None;
    let mut creates = 0;
    let mut prev_depth = 1;
    let mut run = OtherRun::default();
    let mut ops = Vec::new();

    for (i, rec) in records.iter().enumerate() {
        if rec.depth < 1 {
            return Err(convert_err(
                id,
                format!("pc {}: depth {} below 1", rec.pc, rec.depth),
            ));
        }
        if i == 0 {
            if rec.depth != 1 {
                return Err(convert_err(
                    id,
                    format!("pc {}: trace starts at depth {}", rec.pc, rec.depth),
                ));
            }
        } else if rec.depth == prev_depth + 1 {
            let callee = pending.ok_or_else(|| {
                convert_err(id, format!("pc {}: depth increase without a call", rec.pc))
            })?;
            contexts.push(callee);
        } else if rec.depth + 1 == prev_depth {
            contexts.pop();
        } else if rec.depth != prev_depth {
            return Err(convert_err(
                id,
                format!("pc {}: depth jumps {} -> {}", rec.pc, prev_depth, rec.depth),
            ));
        }
        prev_depth = rec.depth;
        pending = None;
        let ctx = *contexts.last().expect("context stack follows depth >= 1");

        match rec.op.as_str() {
            "SLOAD" | "SSTORE" => {
                let cell = StorageCell::new(ctx, rec.operand(0, id)?);
                run.flush(&mut ops);
                ops.push(if rec.op == "SLOAD" {
                    Op::Read {
                        cell,
                        gas: rec.gas_cost,
                    }
                } else {
                    Op::Write {
                        cell,
                        gas: rec.gas_cost,
                    }
                });
                continue;
            }
            "CALL" | "STATICCALL" => pending = Some(rec.operand(1, id)?.low_address()),
            "DELEGATECALL" | "CALLCODE" => pending = Some(ctx),
            "CREATE" | "CREATE2" => {
                pending = Some(synthetic_create_address(id, creates));
                creates += 1;
            }
            _ => {}
        }
        run.gas += rec.gas_cost;
        run.n += 1;
    }
    run.flush(&mut ops);
    Ok(Transaction::call(id, env.index, ops))
}

/// Converts a whole block; envelopes must be ordered by index.
pub fn convert_block(number: u64, txs: &[(TxEnvelope, Vec<StructLogRecord>)]) -> Result<Block> {
    let inner = || -> Result<Block> {
        for (pos, (env, _)) in txs.iter().enumerate() {
            if env.index as usize != pos {
                return Err(convert_err(
                    &env.id,
                    format!("index {} at position {pos}", env.index),
                ));
            }
        }
        let transactions = txs
            .par_iter()
            .map(|(env, records)| convert_tx(env, records))
            .collect::<Result<Vec<_>>>()?;
        let block = Block::new(number, transactions);
        block.validate()?;
        Ok(block)
    };
    inner().map_err(|e| Error::InBlock {
        block: number,
        source: Box::new(e),
    })
}

fn read_records(path: &Path) -> Result<Vec<StructLogRecord>> {
    let inner = || parse_struct_logs(&fs::read_to_string(path)?);
    inner().map_err(|e| e.at_path(path))
}

/// Loads a block from its sidecar file and the trace documents it references.
pub fn load_block(sidecar: impl AsRef<Path>) -> Result<Block> {
    let sidecar = sidecar.as_ref();
    let meta: BlockSidecar = fs::read_to_string(sidecar)
        .map_err(Error::from)
        .and_then(|text| Ok(serde_json::from_str(&text)?))
        .map_err(|e| e.at_path(sidecar))?;
    let base = sidecar.parent().unwrap_or(Path::new(""));
    let txs = meta
        .transactions
        .into_par_iter()
        .map(|env| {
            let records = match &env.trace {
                Some(rel) => read_records(&base.join(rel))?,
                None if env.kind == TxKind::ContractCall => {
                    return Err(
                        convert_err(&env.id, "contract call without a trace document")
                            .at_path(sidecar),
                    )
                }
                None => Vec::new(),
            };
            Ok((env, records))
        })
        .collect::<Result<Vec<_>>>()?;
    convert_block(meta.number, &txs)
}

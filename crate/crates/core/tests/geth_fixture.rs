use std::path::PathBuf;

use specsim::engine::{simulate_block, SimConfig};
use specsim::geth::load_block;
use specsim::metrics::block_metrics;
use specsim::trace::{read_trace, write_trace, Address, Op, StorageCell, TxKind, Word};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/geth/block-4000000.json")
}

fn addr(s: &str) -> Address {
    s.parse().unwrap()
}

fn cell(contract: &str, key: &str) -> StorageCell {
    StorageCell::new(addr(contract), Word::parse_padded(key).unwrap())
}

const PROXY: &str = "5a0b54d5dc17e0aadc383d2db43b0a0d3e029c4c";
const DEX: &str = "b4e16d0168e52d35cacd2c6185b44281ec28c9dc";
const TOKEN: &str = "c02aaa39b223fe8d0a0e5c4f27ead9083c756cc2";
const BAL_A: &str = "8f3ab1c2d4e5f60718293a4b5c6d7e8f90a1b2c3d4e5f60718293a4b5c6d7e8f";

#[test]
fn proxy_transfer_converts_by_hand() {
    let block = load_block(fixture()).unwrap();
    assert_eq!(block.number, 4_000_000);
    assert_eq!(block.transactions.len(), 4);
    let tx = &block.transactions[0];
    let other = |gas, instructions| Op::Other { gas, instructions };
    // storage reached through DELEGATECALL stays with the proxy
    assert_eq!(
        tx.ops,
        [
            other(23, 5),
            Op::Read {
                cell: cell(
                    PROXY,
                    "360894a13ba1a3210667c828492db98dca3e2076cc3735a920a3ca505d382bbc"
                ),
                gas: 2100
            },
            other(2667, 8),
            Op::Read {
                cell: cell(PROXY, BAL_A),
                gas: 2100
            },
            other(6, 2),
            Op::Write {
                cell: cell(PROXY, BAL_A),
                gas: 2900
            },
            other(42, 1),
            Op::Read {
                cell: cell(
                    PROXY,
                    "0d6ec2a4b1f3e5d7c9b8a7f6e5d4c3b2a1908f7e6d5c4b3a29180f7e6d5c4b3a"
                ),
                gas: 2100
            },
            other(3, 1),
            Op::Write {
                cell: cell(
                    PROXY,
                    "0d6ec2a4b1f3e5d7c9b8a7f6e5d4c3b2a1908f7e6d5c4b3a29180f7e6d5c4b3a"
                ),
                gas: 20000
            },
            other(1761, 5),
        ]
    );
    assert_eq!((tx.gas_total, tx.instr_total), (33702, 27));
}

#[test]
fn staticcall_reads_the_callee_storage() {
    let block = load_block(fixture()).unwrap();
    assert_eq!(block.transactions[1].kind, TxKind::ValueTransfer);
    assert_eq!(block.transactions[1].gas_total, 21000);
    let cells: Vec<_> = block.transactions[2]
        .ops
        .iter()
        .filter_map(|o| o.cell().copied())
        .collect();
    assert_eq!(
        cells,
        [
            cell(DEX, "8"),
            cell(
                TOKEN,
                "2b7f4e1a9c3d6b8e0f2a4c6e8b0d2f4a6c8e0b2d4f6a8c0e2b4d6f8a0c2e4b6d"
            ),
            cell(DEX, "8")
        ]
    );
}

#[test]
fn converted_block_simulates_and_round_trips() {
    let block = load_block(fixture()).unwrap();
    block.validate().unwrap();
    let m = block_metrics(&simulate_block(&block, &SimConfig::with_threads(4)));
    // both proxy transfers debit the same balance cell
    assert_eq!(
        m.conflicts_by_cell.keys().copied().collect::<Vec<_>>(),
        [cell(PROXY, BAL_A)]
    );
    let mut buf = Vec::new();
    write_trace(std::slice::from_ref(&block), &mut buf).unwrap();
    assert_eq!(read_trace(buf.as_slice()).unwrap(), [block]);
}

#[test]
fn missing_trace_document_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let sidecar = dir.path().join("b.json");
    std::fs::write(
        &sidecar,
        r#"{"number":1,"transactions":[{"id":"0x1","index":0,"kind":"call","to":"0x00000000000000000000000000000000000000c1","trace":"nope.json"}]}"#,
    )
    .unwrap();
    let err = load_block(&sidecar).unwrap_err().to_string();
    assert!(err.contains("nope.json"), "{err}");
}

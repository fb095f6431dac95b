//! Converts a block of client debug traces and simulates it.
//!
//! `cargo run --example geth_convert [SIDECAR]` defaults to the bundled
//! fixture under `examples/data/geth`.

use std::path::PathBuf;

use specsim::engine::{compute_speedup, simulate_block, SimConfig};
use specsim::geth::load_block;
use specsim::trace::{write_trace, Op};

fn main() {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/geth/block-4000000.json")
        });
    let block = match load_block(&path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };
    for tx in &block.transactions {
        println!(
            "{} ({:?}, gas {}, {} instructions)",
            tx.id, tx.kind, tx.gas_total, tx.instr_total
        );
        for op in &tx.ops {
            match op {
                Op::Read { cell, gas } => println!("  READ  {cell} gas {gas}"),
                Op::Write { cell, gas } => println!("  WRITE {cell} gas {gas}"),
                Op::Other { .. } => {}
            }
        }
    }
    let outcome = simulate_block(&block, &SimConfig::with_threads(4));
    println!("speed-up on 4 threads: {}", compute_speedup(&outcome));

    let mut line = Vec::new();
    write_trace(std::slice::from_ref(&block), &mut line).unwrap();
    println!("canonical form: {} bytes", line.len());
}

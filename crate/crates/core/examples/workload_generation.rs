//! Generates a seeded synthetic trace, stores it compressed and reads it back.

use specsim::trace::{read_trace_file, write_trace_file, Op};
use specsim::workload::{generate, GenParams, Spread};

fn main() {
    let params = GenParams {
        blocks: 500,
        transfers_per_block: Spread::new(20, 10),
        seed: 2024,
        ..Default::default()
    };
    let blocks = generate(&params).unwrap();

    let path = std::env::temp_dir().join("specsim-workload.jsonl.gz");
    write_trace_file(&blocks, &path).unwrap();
    assert_eq!(read_trace_file(&path).unwrap(), blocks);

    let calls: Vec<_> = blocks
        .iter()
        .flat_map(|b| &b.transactions)
        .filter(|t| t.is_call())
        .collect();
    let storage: usize = calls
        .iter()
        .map(|t| t.ops.iter().filter(|o| o.cell().is_some()).count())
        .sum();
    let writes: usize = calls
        .iter()
        .map(|t| {
            t.ops
                .iter()
                .filter(|o| matches!(o, Op::Write { .. }))
                .count()
        })
        .sum();
    let gas: u64 = calls.iter().map(|t| t.gas_total).sum();
    println!(
        "{} blocks, {} calls written to {}",
        blocks.len(),
        calls.len(),
        path.display()
    );
    println!(
        "storage ops per call {:.2}, write share {:.3}, mean call gas {:.0}",
        storage as f64 / calls.len() as f64,
        writes as f64 / storage as f64,
        gas as f64 / calls.len() as f64
    );
}

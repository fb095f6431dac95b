//! Line-delimited trace codec: one JSON-encoded block per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::Block;
use crate::error::{Error, Result};

/// Reads and validates a trace. Blank lines are skipped.
pub fn read_trace<R: BufRead>(reader: R) -> Result<Vec<Block>> {
    let mut blocks: Vec<Block> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let block: Block = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        block.validate()?;
        if let Some(prev) = blocks.last() {
            if block.number <= prev.number {
                return Err(Error::BlockOrder {
                    prev: prev.number,
                    next: block.number,
                });
            }
        }
        blocks.push(block);
    }
    Ok(blocks)
}

/// Writes the canonical serialization: fixed key order, no whitespace, `\n` after every block.
pub fn write_trace<W: Write>(blocks: &[Block], mut sink: W) -> Result<()> {
    for block in blocks {
        serde_json::to_writer(&mut sink, block)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Reads a trace file, transparently decompressing `*.gz`.
pub fn read_trace_file(path: impl AsRef<Path>) -> Result<Vec<Block>> {
    let path = path.as_ref();
    let inner = || -> Result<Vec<Block>> {
        let file = File::open(path)?;
        if is_gz(path) {
            read_trace(BufReader::new(GzDecoder::new(file)))
        } else {
            read_trace(BufReader::new(file))
        }
    };
    inner().map_err(|e| e.at_path(path))
}

/// Writes a trace file, gzip-compressing when the name ends in `.gz`.
pub fn write_trace_file(blocks: &[Block], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let inner = || -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        if is_gz(path) {
            let mut enc = GzEncoder::new(file, Compression::default());
            write_trace(blocks, &mut enc)?;
            enc.finish()?.flush()?;
        } else {
            write_trace(blocks, file)?;
        }
        Ok(())
    };
    inner().map_err(|e| e.at_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{Address, Op, StorageCell, Transaction, Word};

    fn cell(c: u64, k: u64) -> StorageCell {
        StorageCell::new(Address::from_low_u64(c), Word::from_u64(k))
    }

    #[test]
    fn empty_stream_is_empty_trace() {
        assert!(read_trace(&b""[..]).unwrap().is_empty());
        let mut out = Vec::new();
        write_trace(&[], &mut out).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn single_transfer_block_round_trips() {
        let blocks = vec![Block::new(1, vec![Transaction::transfer("0xaa", 0, 21000)])];
        let mut out = Vec::new();
        write_trace(&blocks, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out.clone()).unwrap(),
            "{\"number\":1,\"transactions\":[{\"id\":\"0xaa\",\"index\":0,\"kind\":\"transfer\",\
             \"gas_total\":21000,\"instr_total\":0,\"ops\":[]}]}\n"
        );
        assert_eq!(read_trace(&out[..]).unwrap(), blocks);
    }

    #[test]
    fn gas_mismatch_names_the_transaction() {
        let mut tx = Transaction::call(
            "0xbad",
            0,
            vec![Op::Read {
                cell: cell(1, 1),
                gas: 200,
            }],
        );
        tx.gas_total = 201;
        let line = serde_json::to_string(&Block::new(4, vec![tx])).unwrap();
        match read_trace(line.as_bytes()) {
            Err(Error::Validation {
                block: 4,
                tx,
                reason,
            }) => {
                assert_eq!(tx, "0xbad");
                assert!(reason.contains("gas_total"), "{reason}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let good = serde_json::to_string(&Block::new(1, vec![])).unwrap();
        let input = format!("{good}\n{{not json\n");
        match read_trace(input.as_bytes()) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected parse error on line 2, got {other:?}"),
        }
    }

    #[test]
    fn block_numbers_must_increase() {
        let input = format!(
            "{}\n{}\n",
            serde_json::to_string(&Block::new(5, vec![])).unwrap(),
            serde_json::to_string(&Block::new(5, vec![])).unwrap()
        );
        assert!(matches!(
            read_trace(input.as_bytes()),
            Err(Error::BlockOrder { prev: 5, next: 5 })
        ));
    }

    #[test]
    fn gz_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl.gz");
        let blocks = vec![Block::new(
            9,
            vec![Transaction::call(
                "x",
                0,
                vec![
                    Op::Other {
                        gas: 3,
                        instructions: 1,
                    },
                    Op::Write {
                        cell: cell(2, 3),
                        gas: 20000,
                    },
                ],
            )],
        )];
        write_trace_file(&blocks, &path).unwrap();
        assert_eq!(read_trace_file(&path).unwrap(), blocks);
    }

    #[test]
    fn missing_file_error_names_path() {
        let err = read_trace_file("/nonexistent/trace.jsonl").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/trace.jsonl"));
    }
}

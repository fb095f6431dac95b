//! Seeded synthetic trace generator with tunable contention.
//!
//! Every call picks a contract from a Zipf distribution over `contracts`
//! (exponent `contract_skew`, 0 = uniform) and then keys uniformly within that
//! contract. An optional hot contract receives a fixed share of all calls and
//! has only a handful of keys.
//!
//! # Random streams
//!
//! Block `i` draws exclusively from `ChaCha8Rng::seed_from_u64(seed)` switched
//! to stream `i`, so blocks can be generated in any order or in parallel and
//! still come out identical. Within a block the draw order is: call count,
//! transfer count, the kind shuffle, then per call the hot-contract coin (only
//! when a hot contract is configured), the contract, the storage-op count, and
//! per storage op the preceding non-storage run (gas, then instructions), the
//! key, and the read/write coin; finally the trailing non-storage run.

mod zipf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use zipf::Zipf;

use crate::error::{Error, Result};
use crate::trace::{Address, Block, Op, StorageCell, Transaction, Word};

/// An integer drawn uniformly from `[mean - spread, mean + spread]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: u64,
    #[serde(default)]
    pub spread: u64,
}

impl Spread {
    pub const fn new(mean: u64, spread: u64) -> Self {
        Spread { mean, spread }
    }

    pub const fn fixed(mean: u64) -> Self {
        Spread { mean, spread: 0 }
    }

    fn sample(&self, rng: &mut impl Rng) -> u64 {
        if self.spread == 0 {
            self.mean
        } else {
            rng.gen_range(self.mean - self.spread..=self.mean + self.spread)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HotContract {
    /// Share of calls sent to the hot contract.
    pub fraction: f64,
    pub keys: u64,
}

impl Default for HotContract {
    fn default() -> Self {
        HotContract {
            fraction: 0.31,
            keys: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub blocks: usize,
    pub first_block: u64,
    pub calls_per_block: Spread,
    pub transfers_per_block: Spread,
    /// Storage ops (reads plus writes) per call.
    pub ops_per_call: Spread,
    pub contracts: usize,
    pub keys_per_contract: u64,
    pub contract_skew: f64,
    pub write_ratio: f64,
    /// Gas of each non-storage run; one run precedes every storage op and one ends the call.
    pub other_gas: Spread,
    pub other_instructions: Spread,
    pub read_gas: u64,
    pub write_gas: u64,
    pub transfer_gas: u64,
    pub hot_contract: Option<HotContract>,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            blocks: 100,
            first_block: 1,
            calls_per_block: Spread::new(50, 20),
            transfers_per_block: Spread::fixed(0),
            ops_per_call: Spread::new(6, 4),
            contracts: 200,
            keys_per_contract: 32,
            contract_skew: 1.0,
            write_ratio: 0.35,
            other_gas: Spread::new(2000, 1500),
            other_instructions: Spread::new(300, 200),
            read_gas: 200,
            write_gas: 20_000,
            transfer_gas: 21_000,
            hot_contract: None,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_owned()));
        for (name, s) in [
            ("calls_per_block", self.calls_per_block),
            ("transfers_per_block", self.transfers_per_block),
            ("ops_per_call", self.ops_per_call),
            ("other_gas", self.other_gas),
            ("other_instructions", self.other_instructions),
        ] {
            if s.spread > s.mean {
                return Err(Error::Config(format!("{name}: spread exceeds mean")));
            }
        }
        if self.other_instructions.mean == self.other_instructions.spread {
            return bad("other_instructions must stay >= 1");
        }
        if !(0.0..=1.0).contains(&self.write_ratio) {
            return bad("write_ratio must lie in [0, 1]");
        }
        if !self.contract_skew.is_finite() || self.contract_skew < 0.0 {
            return bad("contract_skew must be a finite number >= 0");
        }
        if self.ops_per_call.mean > 0 && (self.contracts == 0 || self.keys_per_contract == 0) {
            return bad("storage ops need at least one contract and one key");
        }
        if let Some(hot) = self.hot_contract {
            if !(0.0..=1.0).contains(&hot.fraction) || hot.keys == 0 {
                return bad("hot contract needs fraction in [0, 1] and at least one key");
            }
        }
        Ok(())
    }
}

/// Address of the `i`-th regular contract.
pub fn contract_address(i: usize) -> Address {
    Address::from_low_u64(0x0c00_0000_0000 + i as u64)
}

pub fn hot_contract_address() -> Address {
    Address::from_low_u64(0x0c0f_fee0_0000)
}

/// Generates the whole trace.
pub fn generate(params: &GenParams) -> Result<Vec<Block>> {
    params.validate()?;
    let zipf = Zipf::new(params.contracts.max(1), params.contract_skew);
    Ok((0..params.blocks)
        .into_par_iter()
        .map(|i| block_at(params, &zipf, i))
        .collect())
}

/// Generates block `i` alone; equal to `generate(params)[i]`.
pub fn generate_block(params: &GenParams, i: usize) -> Result<Block> {
    params.validate()?;
    Ok(block_at(
        params,
        &Zipf::new(params.contracts.max(1), params.contract_skew),
        i,
    ))
}

fn block_at(p: &GenParams, zipf: &Zipf, i: usize) -> Block {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(i as u64);
    let number = p.first_block + i as u64;

    let calls = p.calls_per_block.sample(&mut rng) as usize;
    let transfers = p.transfers_per_block.sample(&mut rng) as usize;
    let mut kinds: Vec<bool> = std::iter::repeat_n(true, calls)
        .chain(std::iter::repeat_n(false, transfers))
        .collect();
    if transfers > 0 {
        kinds.shuffle(&mut rng);
    }

    let txs = kinds
        .into_iter()
        .enumerate()
        .map(|(idx, is_call)| {
            let id = format!("g{number}-{idx}");
            if is_call {
                Transaction::call(id, idx as u32, call_ops(p, zipf, &mut rng))
            } else {
                Transaction::transfer(id, idx as u32, p.transfer_gas)
            }
        })
        .collect();
    Block::new(number, txs)
}

fn call_ops(p: &GenParams, zipf: &Zipf, rng: &mut ChaCha8Rng) -> Vec<Op> {
    let hot = p.hot_contract.filter(|h| rng.gen_bool(h.fraction));
    let (contract, keys) = match hot {
        Some(h) => (hot_contract_address(), h.keys),
        None => (contract_address(zipf.sample(rng)), p.keys_per_contract),
    };
    let storage_ops = p.ops_per_call.sample(rng);
    let other = |rng: &mut ChaCha8Rng| Op::Other {
        gas: p.other_gas.sample(rng),
        instructions: p.other_instructions.sample(rng),
    };
    let mut ops = Vec::with_capacity(2 * storage_ops as usize + 1);
    for _ in 0..storage_ops {
        ops.push(other(rng));
        let cell = StorageCell::new(contract, Word::from_u64(rng.gen_range(0..keys)));
        ops.push(if rng.gen_bool(p.write_ratio) {
            Op::Write {
                cell,
                gas: p.write_gas,
            }
        } else {
            Op::Read {
                cell,
                gas: p.read_gas,
            }
        });
    }
    ops.push(other(rng));
    ops
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate_block, SimConfig};
    use crate::metrics::{aggregate, block_metrics};

    #[test]
    fn zero_blocks_is_empty() {
        let p = GenParams {
            blocks: 0,
            ..Default::default()
        };
        assert!(generate(&p).unwrap().is_empty());
    }

    #[test]
    fn generated_blocks_validate() {
        let p = GenParams {
            blocks: 20,
            transfers_per_block: Spread::new(3, 2),
            hot_contract: Some(HotContract::default()),
            ..Default::default()
        };
        let blocks = generate(&p).unwrap();
        for b in &blocks {
            b.validate().unwrap();
        }
        assert!(blocks.windows(2).all(|w| w[0].number < w[1].number));
    }

    #[test]
    fn read_only_workload_never_conflicts() {
        let p = GenParams {
            blocks: 30,
            contract_skew: 0.0,
            keys_per_contract: 1 << 20,
            write_ratio: 0.0,
            ..Default::default()
        };
        let metrics: Vec<_> = generate(&p)
            .unwrap()
            .iter()
            .map(|b| block_metrics(&simulate_block(b, &SimConfig::default())))
            .collect();
        let report = aggregate(&metrics);
        assert_eq!(report.aborts, 0);
        assert!(report.hotspot_histogram.is_empty());
    }

    #[test]
    fn single_block_matches_full_generation() {
        let p = GenParams {
            blocks: 12,
            seed: 99,
            ..Default::default()
        };
        let all = generate(&p).unwrap();
        assert_eq!(generate_block(&p, 7).unwrap(), all[7]);
    }

    #[test]
    fn same_seed_same_bytes_different_seed_differs() {
        let p = GenParams {
            blocks: 10,
            seed: 7,
            ..Default::default()
        };
        let encode = |b: &[Block]| {
            let mut out = Vec::new();
            crate::trace::write_trace(b, &mut out).unwrap();
            out
        };
        let a = encode(&generate(&p).unwrap());
        assert_eq!(a, encode(&generate(&p).unwrap()));
        assert_ne!(a, encode(&generate(&GenParams { seed: 8, ..p }).unwrap()));
    }

    #[test]
    fn means_track_parameters() {
        let p = GenParams {
            blocks: 250,
            seed: 3,
            ..Default::default()
        };
        let calls: Vec<Transaction> = generate(&p)
            .unwrap()
            .into_iter()
            .flat_map(|b| b.transactions)
            .collect();
        assert!(calls.len() >= 10_000, "{}", calls.len());
        let n = calls.len() as f64;
        let storage: usize = calls
            .iter()
            .map(|t| t.ops.iter().filter(|o| o.cell().is_some()).count())
            .sum();
        let mean_ops = storage as f64 / n;
        assert!(
            (mean_ops / p.ops_per_call.mean as f64 - 1.0).abs() < 0.05,
            "{mean_ops}"
        );

        let expected_gas = (p.ops_per_call.mean as f64 + 1.0) * p.other_gas.mean as f64
            + p.ops_per_call.mean as f64
                * (p.write_ratio * p.write_gas as f64 + (1.0 - p.write_ratio) * p.read_gas as f64);
        let mean_gas = calls.iter().map(|t| t.gas_total as f64).sum::<f64>() / n;
        assert!(
            (mean_gas / expected_gas - 1.0).abs() < 0.05,
            "{mean_gas} vs {expected_gas}"
        );
    }

    #[test]
    fn hot_contract_share() {
        let p = GenParams {
            blocks: 200,
            hot_contract: Some(HotContract::default()),
            ..Default::default()
        };
        let calls: Vec<Transaction> = generate(&p)
            .unwrap()
            .into_iter()
            .flat_map(|b| b.transactions)
            .collect();
        let hot = [hot_contract_address()].into_iter().collect();
        let share =
            calls.iter().filter(|t| t.touches_any(&hot)).count() as f64 / calls.len() as f64;
        assert!((share - 0.31).abs() < 0.02, "{share}");
    }

    #[test]
    fn skew_raises_conflicts_on_average() {
        let aborts = |skew: f64| -> u64 {
            (0..5)
                .map(|seed| {
                    let p = GenParams {
                        blocks: 40,
                        contract_skew: skew,
                        seed,
                        ..Default::default()
                    };
                    let m: Vec<_> = generate(&p)
                        .unwrap()
                        .iter()
                        .map(|b| block_metrics(&simulate_block(b, &SimConfig::default())))
                        .collect();
                    aggregate(&m).aborts
                })
                .sum()
        };
        let (low, mid, high) = (aborts(0.0), aborts(1.0), aborts(2.0));
        assert!(low <= mid && mid <= high, "{low} {mid} {high}");
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(generate(&GenParams {
            write_ratio: 1.5,
            ..Default::default()
        })
        .is_err());
        assert!(generate(&GenParams {
            contract_skew: -1.0,
            ..Default::default()
        })
        .is_err());
        assert!(generate(&GenParams {
            ops_per_call: Spread::new(2, 3),
            ..Default::default()
        })
        .is_err());
    }
}

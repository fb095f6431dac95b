//! Experiment matrices: the baseline engine plus its variants, swept over a trace.
//!
//! Every axis of an [`ExperimentMatrix`] is a list; [`run_experiment`] runs
//! the cartesian product and returns one report per configuration, keyed by a
//! canonical configuration string such as `t16-rw-p1-gas-clk_instr-pred0-excl_none`.

mod manifest;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use manifest::{write_reports, Manifest, ReportIndex, ReportIndexEntry};

use crate::engine::{simulate_block, ClockMode, CostProxy, LockMode, SimConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    block_metrics, top_conflicting_contracts, Accumulator, AggregateReport, BlockMetrics,
    ReportOptions,
};
use crate::trace::{Address, Block};

/// Which contracts to leave out of a run.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exclusion {
    None,
    /// The `k` most conflicting contracts of a baseline pass.
    TopK(usize),
    Explicit {
        name: String,
        contracts: BTreeSet<Address>,
    },
}

impl Exclusion {
    pub fn name(&self) -> String {
        match self {
            Exclusion::None => "none".into(),
            Exclusion::TopK(k) => format!("top{k}"),
            Exclusion::Explicit { name, .. } => name.clone(),
        }
    }

    fn parse_named(s: &str) -> std::result::Result<Self, String> {
        if s == "none" {
            return Ok(Exclusion::None);
        }
        match s.strip_prefix("top").map(str::parse::<usize>) {
            Some(Ok(k)) if k >= 1 => Ok(Exclusion::TopK(k)),
            _ => Err(format!(
                "unknown exclusion {s:?}; expected \"none\", \"topK\" or a table"
            )),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExclusionRepr {
    Named(String),
    Explicit {
        name: String,
        contracts: BTreeSet<Address>,
    },
}

impl Serialize for Exclusion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exclusion::Explicit { name, contracts } => ExclusionRepr::Explicit {
                name: name.clone(),
                contracts: contracts.clone(),
            }
            .serialize(s),
            other => ExclusionRepr::Named(other.name()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Exclusion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ExclusionRepr::deserialize(d)? {
            ExclusionRepr::Named(s) => Exclusion::parse_named(&s).map_err(serde::de::Error::custom),
            ExclusionRepr::Explicit { name, contracts } => {
                if name == "none" || Exclusion::parse_named(&name).is_ok() {
                    return Err(serde::de::Error::custom(format!(
                        "reserved exclusion name {name:?}"
                    )));
                }
                Ok(Exclusion::Explicit { name, contracts })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentMatrix {
    #[serde(rename = "threads")]
    pub thread_counts: Vec<usize>,
    #[serde(rename = "locks")]
    pub lock_modes: Vec<LockMode>,
    #[serde(rename = "phases")]
    pub phase_counts: Vec<usize>,
    pub proxies: Vec<CostProxy>,
    pub clocks: Vec<ClockMode>,
    pub predictor: Vec<bool>,
    pub exclusions: Vec<Exclusion>,
    /// Keep every `stride`-th block of the trace, starting with the first.
    pub stride: usize,
    pub include_transfers: bool,
    pub histogram_cap: f64,
    pub top_k: usize,
}

impl Default for ExperimentMatrix {
    fn default() -> Self {
        let report = ReportOptions::default();
        ExperimentMatrix {
            thread_counts: vec![16, 32, 64],
            lock_modes: vec![LockMode::ReadWrite],
            phase_counts: vec![1],
            proxies: vec![CostProxy::Gas],
            clocks: vec![ClockMode::Instructions],
            predictor: vec![false],
            exclusions: vec![Exclusion::None],
            stride: 1,
            include_transfers: false,
            histogram_cap: report.histogram_cap,
            top_k: report.top_k,
        }
    }
}

impl ExperimentMatrix {
    /// A matrix holding exactly one configuration.
    pub fn single(config: &SimConfig, exclusion: Exclusion) -> Self {
        let exclusion = match exclusion {
            Exclusion::None if !config.excluded_contracts.is_empty() => Exclusion::Explicit {
                name: "custom".into(),
                contracts: config.excluded_contracts.clone(),
            },
            other => other,
        };
        ExperimentMatrix {
            thread_counts: vec![config.threads],
            lock_modes: vec![config.lock_mode],
            phase_counts: vec![config.phases],
            proxies: vec![config.proxy],
            clocks: vec![config.clock],
            predictor: vec![config.predictor],
            exclusions: vec![exclusion],
            include_transfers: config.include_transfers,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("threads", self.thread_counts.is_empty()),
            ("locks", self.lock_modes.is_empty()),
            ("phases", self.phase_counts.is_empty()),
            ("proxies", self.proxies.is_empty()),
            ("clocks", self.clocks.is_empty()),
            ("predictor", self.predictor.is_empty()),
            ("exclusions", self.exclusions.is_empty()),
        ];
        if let Some((axis, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("matrix axis {axis} is empty")));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if self.thread_counts.contains(&0) || self.phase_counts.contains(&0) {
            return Err(Error::Config(
                "thread and phase counts must be at least 1".into(),
            ));
        }
        if self.top_k == 0 || self.histogram_cap.is_nan() || self.histogram_cap <= 0.0 {
            return Err(Error::Config(
                "top_k and histogram_cap must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn report_options(&self) -> ReportOptions {
        ReportOptions {
            histogram_cap: self.histogram_cap,
            top_k: self.top_k,
        }
    }

    /// Every configuration of the product, in axis order.
    pub fn configurations(&self) -> Vec<Experiment> {
        let mut out = Vec::new();
        for &threads in &self.thread_counts {
            for &lock_mode in &self.lock_modes {
                for &phases in &self.phase_counts {
                    for &proxy in &self.proxies {
                        for &clock in &self.clocks {
                            for &predictor in &self.predictor {
                                for exclusion in &self.exclusions {
                                    out.push(Experiment {
                                        config: SimConfig {
                                            threads,
                                            lock_mode,
                                            phases,
                                            proxy,
                                            clock,
                                            predictor,
                                            include_transfers: self.include_transfers,
                                            excluded_contracts: BTreeSet::new(),
                                        },
                                        exclusion: exclusion.clone(),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One point of a matrix: a configuration without exclusions, plus the exclusion rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Experiment {
    pub config: SimConfig,
    pub exclusion: Exclusion,
}

impl Experiment {
    pub fn key(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        write!(
            f,
            "t{}-{}-p{}-{}-clk_{}-pred{}-excl_{}",
            c.threads,
            match c.lock_mode {
                LockMode::ReadWrite => "rw",
                LockMode::Mutex => "mutex",
            },
            c.phases,
            match c.proxy {
                CostProxy::Gas => "gas",
                CostProxy::Instructions => "instr",
            },
            match c.clock {
                ClockMode::Instructions => "instr",
                ClockMode::Proxy => "proxy",
            },
            u8::from(c.predictor),
            self.exclusion.name()
        )?;
        if c.include_transfers {
            f.write_str("-xfer")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub key: String,
    pub exclusion: String,
    pub stride: usize,
    /// Effective configuration, with the resolved exclusion set.
    pub config: SimConfig,
    pub report: AggregateReport,
}

/// Drops every contract call that touches storage of an excluded contract.
/// Surviving transactions are renumbered so indices stay contiguous.
pub fn apply_contract_filter(trace: &[Block], excluded: &BTreeSet<Address>) -> Vec<Block> {
    trace
        .iter()
        .map(|block| {
            let txs = block
                .transactions
                .iter()
                .filter(|tx| !(tx.is_call() && tx.touches_any(excluded)))
                .enumerate()
                .map(|(i, tx)| {
                    let mut tx = tx.clone();
                    tx.index = i as u32;
                    tx
                })
                .collect();
            Block::new(block.number, txs)
        })
        .collect()
}

/// Simulates every block under `config`, in parallel, returning metrics in block order.
pub fn simulate_trace(trace: &[Block], config: &SimConfig) -> Vec<BlockMetrics> {
    trace
        .par_iter()
        .map(|b| block_metrics(&simulate_block(b, config)))
        .collect()
}

/// Runs `base` over the trace and returns its `k` most conflicting contracts.
///
/// # Panics
///
/// If `k` is zero.
pub fn auto_top_k_exclusion(trace: &[Block], base: &SimConfig, k: usize) -> BTreeSet<Address> {
    top_conflicting_contracts(&simulate_trace(trace, base), k)
        .into_iter()
        .map(|c| c.contract)
        .collect()
}

/// Blocks at positions `0, stride, 2 * stride, ...`.
pub fn sample_blocks(trace: &[Block], stride: usize) -> Vec<Block> {
    trace.iter().step_by(stride.max(1)).cloned().collect()
}

/// Runs every configuration of `matrix` over `trace`.
pub fn run_experiment(
    trace: &[Block],
    matrix: &ExperimentMatrix,
) -> Result<BTreeMap<String, ExperimentReport>> {
    matrix.validate()?;
    let sampled = sample_blocks(trace, matrix.stride);
    for block in &sampled {
        block.validate().map_err(|e| Error::InBlock {
            block: block.number,
            source: Box::new(e),
        })?;
    }
    let opts = matrix.report_options();
    let mut out = BTreeMap::new();
    for experiment in matrix.configurations() {
        let mut config = experiment.config.clone();
        config.excluded_contracts = match &experiment.exclusion {
            Exclusion::None => BTreeSet::new(),
            Exclusion::TopK(k) => auto_top_k_exclusion(&sampled, &experiment.config, *k),
            Exclusion::Explicit { contracts, .. } => contracts.clone(),
        };
        let mut acc = Accumulator::default();
        for m in simulate_trace(&sampled, &config) {
            acc.push(&m);
        }
        let key = experiment.key();
        out.insert(
            key.clone(),
            ExperimentReport {
                key,
                exclusion: experiment.exclusion.name(),
                stride: matrix.stride,
                config,
                report: acc.finish(&opts),
            },
        );
    }
    Ok(out)
}

//! Deterministic simulator for speculative parallel execution of blockchain
//! transaction traces.
//!
//! Blocks are replayed through a greedy engine: a concurrent phase where
//! simulated threads speculatively execute transactions under a per-location
//! lock table, then a sequential phase replaying whatever aborted. The crate
//! covers the whole pipeline around that engine: trace ingestion from client
//! debug traces ([`geth`]), synthetic workloads ([`workload`]), per-block and
//! aggregate metrics ([`metrics`]) and experiment sweeps ([`experiments`]).

pub mod cli;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod geth;
pub mod metrics;
pub mod trace;
pub mod workload;

pub use error::{Error, Result};

use std::fmt;

use num_rational::Ratio;

use super::BlockOutcome;

/// Exact ratio of sequential cost to speculative cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Speedup(Ratio<u128>);

impl Speedup {
    pub const ONE: Speedup = Speedup(Ratio::new_raw(1, 1));

    pub fn new(sequential: u128, speculative: u128) -> Self {
        if speculative == 0 {
            return Speedup::ONE;
        }
        Speedup(Ratio::new(sequential, speculative))
    }

    pub fn ratio(&self) -> Ratio<u128> {
        self.0
    }

    pub fn value(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl fmt::Display for Speedup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl serde::Serialize for Speedup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

/// Baseline cost over the summed per-phase maximum thread cost plus the
/// sequential replay. With `config.predictor` set, aborted work is dropped
/// from the thread costs first. A block with nothing simulated scores 1.
pub fn compute_speedup(outcome: &BlockOutcome) -> Speedup {
    if outcome.simulated.is_empty() {
        return Speedup::ONE;
    }
    let concurrent: u128 = outcome
        .phases
        .iter()
        .map(|p| {
            if outcome.config.predictor {
                p.committed_thread_cost().into_iter().max().unwrap_or(0)
            } else {
                p.max_thread_cost()
            }
        })
        .map(u128::from)
        .sum();
    Speedup::new(
        u128::from(outcome.seq_baseline_cost),
        concurrent + u128::from(outcome.sequential_cost),
    )
}

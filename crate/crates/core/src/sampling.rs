use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::Domain;
use crate::parallel::Execution;
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_COUNT: usize = 100;

/// Deterministic uniform sampling in a coordinate box, rejecting points
/// outside the chart domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPlan {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(rename = "box", default)]
    pub bounds: Vec<[f64; 2]>,
    #[serde(skip)]
    pub execution: Execution,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_count() -> usize {
    DEFAULT_COUNT
}

impl SamplingPlan {
    pub fn new(bounds: Vec<[f64; 2]>) -> Self {
        SamplingPlan {
            seed: DEFAULT_SEED,
            count: DEFAULT_COUNT,
            bounds,
            execution: Execution::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn points(&self, domain: &Domain) -> Result<Vec<Vec<f64>>> {
        for (i, [lo, hi]) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Sampling(format!("bad bounds [{lo}, {hi}] for coordinate {i}")));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.count);
        let max_attempts = self.count.saturating_mul(1000).max(1000);
        let mut attempts = 0;
        while out.len() < self.count {
            if attempts == max_attempts {
                return Err(Error::Sampling(format!(
                    "only {} of {} points fell inside `{}`",
                    out.len(),
                    self.count,
                    domain.source()
                )));
            }
            attempts += 1;
            let p: Vec<f64> = self
                .bounds
                .iter()
                .map(|&[lo, hi]| if lo == hi { lo } else { rng.gen_range(lo..hi) })
                .collect();
            if domain.contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    pub(crate) fn check_dimension(&self, dim: usize) -> Result<()> {
        if self.bounds.len() != dim {
            return Err(Error::Sampling(format!(
                "sampling box has {} coordinates, chart has {dim}",
                self.bounds.len()
            )));
        }
        Ok(())
    }
}

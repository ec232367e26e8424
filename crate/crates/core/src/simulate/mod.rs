//! Two independent engines for stationary queue-length samples: an exact sampler built on the
//! total-population law plus simplex allocation, and a continuous-time Markov chain of the
//! network dynamics that never touches the product form.
//!
//! Rows are produced in fixed-size chunks; chunk `c` draws from `ChaCha8Rng` seeded with the
//! batch seed on stream `c`, so batches are bit-identical whatever the thread count.

mod ctmc;
mod stationary;
mod stats;

pub use ctmc::{ctmc_occupancy, simulate_ctmc, CtmcChain, CtmcConfig};
pub use stationary::{sample_stationary, StationarySampler};
pub use stats::{extreme_stats, kolmogorov_distance, total_variation, ExtremeSummary, GumbelPoint};

use crate::model::NetworkSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    StationaryExact,
    Ctmc,
}

/// Queue-length samples, one row per replication, queues in canonical (ascending κ) order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub spec: NetworkSpec,
    pub n: usize,
    pub samples: Vec<u64>,
    pub seed: u64,
    pub stream_ids: Vec<u64>,
    pub engine: Engine,
}

impl SampleBatch {
    pub fn rows(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.samples.len() / self.n
        }
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.samples[i * self.n..(i + 1) * self.n]
    }

    pub fn maxima(&self) -> Vec<u64> {
        self.samples.chunks(self.n).map(|r| r.iter().copied().max().unwrap_or(0)).collect()
    }

    /// Customers at the hub, M = m − |row|.
    pub fn hub(&self, i: usize) -> u64 {
        self.spec.m - self.row(i).iter().sum::<u64>()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for q in 1..=self.n {
            write!(out, "q{q},").unwrap();
        }
        out.push_str("max,M\n");
        for i in 0..self.rows() {
            for x in self.row(i) {
                write!(out, "{x},").unwrap();
            }
            let max = self.row(i).iter().copied().max().unwrap_or(0);
            writeln!(out, "{max},{}", self.hub(i)).unwrap();
        }
        out
    }
}

pub(crate) fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

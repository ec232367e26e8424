use super::{chunk_rng, Engine, SampleBatch};
use crate::error::{Error, Result};
use crate::exact::{concave_conv, unbounded_level, LogSeq, Population};
use crate::model::NetworkSpec;
use crate::simplex::{sample_discrete_into, DiscreteSimplex};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

const CHUNK: usize = 4096;

fn weighted_from_logs(ln_w: &[f64]) -> WeightedIndex<f64> {
    let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    WeightedIndex::new(ln_w.iter().map(|&v| (v - max).exp())).expect("a positive weight")
}

/// Exact draws from the product form: k = |L| from its law, then the per-level totals by
/// back-sampling through the level convolution, then uniform points of each level's simplex.
pub struct StationarySampler {
    counts: Vec<u64>,
    n: usize,
    lo: usize,
    total: WeightedIndex<f64>,
    levels: Vec<LogSeq>,
    /// prefix[g] = convolution of levels 0..=g
    prefix: Vec<LogSeq>,
    split_cache: RwLock<HashMap<(usize, usize), Arc<(usize, WeightedIndex<f64>)>>>,
}

impl StationarySampler {
    pub fn new(spec: &NetworkSpec) -> Result<StationarySampler> {
        let pop = Population::new(spec)?;
        let ln_p: Vec<f64> = pop.window().map(|k| pop.ln_prob(k)).collect();
        let total = weighted_from_logs(&ln_p);
        let hi = pop.hi;
        let levels: Vec<LogSeq> =
            pop.levels.iter().zip(&pop.ln_rho).map(|(l, &r)| unbounded_level(l.count, r, hi)).collect();
        let mut prefix: Vec<LogSeq> = vec![levels[0].clone()];
        for g in 1..levels.len() {
            let next = concave_conv(&prefix[g - 1], &levels[g], hi);
            prefix.push(next);
        }
        let counts: Vec<u64> = pop.levels.iter().map(|l| l.count).collect();
        let n = counts.iter().sum::<u64>() as usize;
        if n > u32::MAX as usize {
            return Err(Error::InvalidSpec("too many queues to sample".into()));
        }
        Ok(StationarySampler { counts, n, lo: pop.lo, total, levels, prefix, split_cache: RwLock::new(HashMap::new()) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Law of t_g given that levels 0..=g hold k customers: ∝ U_g(t) P_{g−1}(k − t).
    fn split(&self, g: usize, k: usize) -> Arc<(usize, WeightedIndex<f64>)> {
        if let Some(d) = self.split_cache.read().unwrap().get(&(g, k)) {
            return d.clone();
        }
        let (u, p) = (&self.levels[g], &self.prefix[g - 1]);
        let t_lo = u.lo.max(k.saturating_sub(p.hi()));
        let t_hi = u.hi().min(k.saturating_sub(p.lo));
        let ln_w: Vec<f64> = (t_lo..=t_hi).map(|t| u.get(t) + p.get(k - t)).collect();
        let d = Arc::new((t_lo, weighted_from_logs(&ln_w)));
        self.split_cache.write().unwrap().insert((g, k), d.clone());
        d
    }

    /// Fill `out` (length n) with one stationary draw.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [u64]) {
        let mut k = self.lo + self.total.sample(rng);
        let mut totals = vec![0usize; self.counts.len()];
        for g in (1..self.counts.len()).rev() {
            let d = self.split(g, k);
            let t = d.0 + d.1.sample(rng);
            totals[g] = t;
            k -= t;
        }
        totals[0] = k;
        let mut start = 0usize;
        for (g, &c) in self.counts.iter().enumerate() {
            let end = start + c as usize;
            sample_discrete_into(DiscreteSimplex::new(c, totals[g] as u64), rng, &mut out[start..end]);
            start = end;
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let mut out = vec![0; self.n];
        self.sample_into(rng, &mut out);
        out
    }
}

/// `count` i.i.d. stationary rows; reproducible from `seed` regardless of thread count.
pub fn sample_stationary(spec: &NetworkSpec, count: usize, seed: u64) -> Result<SampleBatch> {
    let spec = spec.validate()?;
    let sampler = StationarySampler::new(&spec)?;
    let n = sampler.n();
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let rows = CHUNK.min(count - c * CHUNK);
            let mut rng = chunk_rng(seed, c as u64);
            let mut buf = vec![0u64; rows * n];
            for r in 0..rows {
                sampler.sample_into(&mut rng, &mut buf[r * n..(r + 1) * n]);
            }
            buf
        })
        .collect();
    Ok(SampleBatch {
        spec,
        n,
        samples: parts.concat(),
        seed,
        stream_ids: (0..chunks as u64).collect(),
        engine: Engine::StationaryExact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_network() {
        let b = sample_stationary(&NetworkSpec::homogeneous(1, 1, 1.0), 20_000, 3).unwrap();
        let ones = b.samples.iter().filter(|&&x| x == 1).count() as f64 / 20_000.0;
        assert!((ones - 0.5).abs() < 0.015);
        assert!(b.samples.iter().all(|&x| x <= 1));
    }

    #[test]
    fn grouped_rows_respect_population() {
        let spec = NetworkSpec::grouped(30, &[(2, 5.0), (3, 9.0), (1, 20.0)]);
        let b = sample_stationary(&spec, 5000, 9).unwrap();
        assert_eq!(b.n, 6);
        for i in 0..b.rows() {
            assert!(b.row(i).iter().sum::<u64>() <= 30);
        }
    }

    #[test]
    fn deterministic() {
        let spec = NetworkSpec::grouped(40, &[(3, 10.0), (2, 25.0)]);
        let a = sample_stationary(&spec, 9000, 42).unwrap();
        let b = sample_stationary(&spec, 9000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_stationary(&spec, 9000, 43).unwrap();
        assert_ne!(a.samples, c.samples);
    }
}

use super::{Engine, SampleBatch};
use crate::error::{Error, Result};
use crate::exact::Pmf;
use crate::model::non_bottleneck_mean;
use crate::simplex::gumbel_cdf;
use serde::Serialize;
use std::collections::HashMap;
use std::hash::Hash;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GumbelPoint {
    pub x: f64,
    /// empirical P[n·max/(m − κ) − ln n ≤ x]
    pub ecdf: f64,
    pub std_error: f64,
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremeSummary {
    pub rows: usize,
    pub engine: Engine,
    pub mean: f64,
    pub variance: f64,
    /// standard error of the mean (batch means for the Markov chain)
    pub std_error: f64,
    pub pmf: Pmf,
    /// n₁ and m − E M − E|𝙻| used for the Gumbel rescaling
    pub bottleneck: u64,
    pub spread: f64,
    pub gumbel: Vec<GumbelPoint>,
}

const BATCHES: usize = 20;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// Standard error of the mean of `xs`: i.i.d. formula, or batch means for dependent rows.
fn std_error(xs: &[f64], dependent: bool) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    if dependent && xs.len() >= 2 * BATCHES {
        let size = xs.len() / BATCHES;
        let means: Vec<f64> = xs.chunks(size).take(BATCHES).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        let (_, v) = mean_var(&means);
        (v / BATCHES as f64).sqrt()
    } else {
        (mean_var(xs).1 / xs.len() as f64).sqrt()
    }
}

/// Empirical law of the row maxima and its Gumbel-rescaled CDF on x ∈ [−2, 5].
pub fn extreme_stats(batch: &SampleBatch) -> Result<ExtremeSummary> {
    if batch.rows() == 0 {
        return Err(Error::Domain("empty sample batch".into()));
    }
    let maxima = batch.maxima();
    let dependent = batch.engine == Engine::Ctmc;
    let xs: Vec<f64> = maxima.iter().map(|&x| x as f64).collect();
    let (mean, _) = mean_var(&xs);
    let variance = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
    let top = *maxima.iter().max().unwrap() as usize;
    let mut counts = vec![0u64; top + 1];
    for &x in &maxima {
        counts[x as usize] += 1;
    }
    let levels = batch.spec.levels()?;
    let n1 = levels[0].count;
    let spread = batch.spec.m as f64 - levels[0].kappa - non_bottleneck_mean(&levels);
    let mut gumbel = Vec::new();
    if spread > 0.0 {
        let nf = n1 as f64;
        let scaled: Vec<f64> = xs.iter().map(|x| nf * x / spread - nf.ln()).collect();
        for i in 0..=28 {
            let x = -2.0 + 0.25 * i as f64;
            let ind: Vec<f64> = scaled.iter().map(|&v| if v <= x { 1.0 } else { 0.0 }).collect();
            let ecdf = ind.iter().sum::<f64>() / ind.len() as f64;
            gumbel.push(GumbelPoint { x, ecdf, std_error: std_error(&ind, dependent), limit: gumbel_cdf(x) });
        }
    }
    Ok(ExtremeSummary {
        rows: batch.rows(),
        engine: batch.engine,
        mean,
        variance,
        std_error: std_error(&xs, dependent),
        pmf: Pmf::from_counts(0, &counts),
        bottleneck: n1,
        spread,
        gumbel,
    })
}

/// sup_x |F_n(x) − F(x)| for a sorted sample.
pub fn kolmogorov_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// ½ Σ |p − q| over the union of supports.
pub fn total_variation<K: Eq + Hash + Clone>(p: &HashMap<K, f64>, q: &HashMap<K, f64>) -> f64 {
    let mut s = 0.0;
    for (k, a) in p {
        s += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, b) in q {
        if !p.contains_key(k) {
            s += b.abs();
        }
    }
    0.5 * s
}

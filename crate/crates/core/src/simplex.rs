//! Uniform laws on the discrete simplex Δⁿ_k and the continuous unit simplex Δⁿ.

use crate::exact::simplex_max_cdf;
use crate::numerics::{harmonic, ln_binomial, ln_sqrt_2pi};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiscreteSimplex {
    pub n: u64,
    pub k: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContinuousSimplex {
    pub n: u64,
}

impl DiscreteSimplex {
    pub fn new(n: u64, k: u64) -> DiscreteSimplex {
        assert!(n >= 1, "simplex dimension must be positive");
        DiscreteSimplex { n, k }
    }

    pub fn ln_cardinality(&self) -> f64 {
        ln_binomial((self.n + self.k - 1) as f64, (self.n - 1) as f64)
    }
}

/// Uniform draw from Δⁿ_k: choose n − 1 of the k + n − 1 slots as bars (stars and bars).
pub fn sample_discrete<R: Rng + ?Sized>(s: DiscreteSimplex, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0; s.n as usize];
    sample_discrete_into(s, rng, &mut out);
    out
}

pub fn sample_discrete_into<R: Rng + ?Sized>(s: DiscreteSimplex, rng: &mut R, out: &mut [u64]) {
    let n = s.n as usize;
    debug_assert_eq!(out.len(), n);
    if n == 1 {
        out[0] = s.k;
        return;
    }
    let slots = (s.k as usize) + n - 1;
    let mut bars: Vec<usize> = index::sample(rng, slots, n - 1).into_vec();
    bars.sort_unstable();
    let mut prev = 0usize;
    for (i, &b) in bars.iter().enumerate() {
        // stars strictly between consecutive bars
        out[i] = (b - prev) as u64;
        prev = b + 1;
    }
    out[n - 1] = (slots - prev) as u64;
}

/// Z/|Z| with i.i.d. unit exponentials Z.
pub fn sample_continuous<R: Rng + ?Sized>(s: ContinuousSimplex, rng: &mut R) -> Vec<f64> {
    let z: Vec<f64> = (0..s.n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = z.iter().sum();
    z.into_iter().map(|x| x / total).collect()
}

/// max X for X uniform on Δⁿ, without materializing the point.
pub fn sample_continuous_max<R: Rng + ?Sized>(s: ContinuousSimplex, rng: &mut R) -> f64 {
    let (mut total, mut max) = (0.0f64, 0.0f64);
    for _ in 0..s.n {
        let z: f64 = Exp1.sample(rng);
        total += z;
        max = max.max(z);
    }
    max / total
}

/// P[max X ≤ j] for X uniform on Δⁿ_k.
pub fn discrete_max_cdf(s: DiscreteSimplex, j: u64) -> f64 {
    simplex_max_cdf(s.k, s.n, j).cdf
}

/// Exact mean and variance of max X on the continuous simplex: H₁(n)/n and
/// (nH₂(n) − H₁(n)²)/(n²(n+1)).
pub fn continuous_max_moments(s: ContinuousSimplex) -> (f64, f64) {
    let n = s.n as f64;
    let (h1, h2) = (harmonic(s.n, 1), harmonic(s.n, 2));
    (h1 / n, (n * h2 - h1 * h1) / (n * n * (n + 1.0)))
}

pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// Exact P[|Y| = target] for |Y| the sum of n i.i.d. geometrics with P[Y₁ = y] = (1−p)pʸ,
/// next to its Gaussian local-limit estimate 1/√(2πnσ²), σ² = p/(1−p)².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalLimit {
    pub exact: f64,
    pub gaussian_estimate: f64,
}

impl LocalLimit {
    pub fn ratio(&self) -> f64 {
        self.exact / self.gaussian_estimate
    }
}

pub fn negbin_local_pmf(n: u64, p: f64, target: u64) -> LocalLimit {
    assert!(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
    let nf = n as f64;
    let ln_exact = ln_binomial((target + n - 1) as f64, (n - 1) as f64) + nf * (-p).ln_1p() + target as f64 * p.ln();
    let var = p / ((1.0 - p) * (1.0 - p));
    let ln_est = -ln_sqrt_2pi() - 0.5 * (nf * var).ln();
    LocalLimit { exact: ln_exact.exp(), gaussian_estimate: ln_est.exp() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn discrete_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(sample_discrete(DiscreteSimplex::new(1, 9), &mut rng), vec![9]);
        let mut ones = 0;
        for _ in 0..10_000 {
            let x = sample_discrete(DiscreteSimplex::new(2, 1), &mut rng);
            assert_eq!(x.iter().sum::<u64>(), 1);
            ones += x[0];
        }
        assert!((ones as f64 / 10_000.0 - 0.5).abs() < 0.02);
        assert_eq!(sample_discrete(DiscreteSimplex::new(4, 0), &mut rng), vec![0; 4]);
    }

    #[test]
    fn discrete_cdf_examples() {
        let s = DiscreteSimplex::new(2, 2);
        assert!((discrete_max_cdf(s, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(discrete_max_cdf(s, 2), 1.0);
        // n = k = 1000: the jump sits near ln n / ln 2
        let s = DiscreteSimplex::new(1000, 1000);
        let loc = 1000f64.ln() / 2f64.ln();
        assert!(discrete_max_cdf(s, (0.75 * loc).floor() as u64) < 0.05);
        assert!(discrete_max_cdf(s, (1.5 * loc).ceil() as u64) > 0.95);
    }

    #[test]
    fn continuous_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert_eq!(sample_continuous(ContinuousSimplex { n: 1 }, &mut rng), vec![1.0]);
        let x = sample_continuous(ContinuousSimplex { n: 50 }, &mut rng);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(continuous_max_moments(ContinuousSimplex { n: 1 }), (1.0, 0.0));
        let (m, v) = continuous_max_moments(ContinuousSimplex { n: 2 });
        assert!((m - 0.75).abs() < 1e-15 && (v - 1.0 / 48.0).abs() < 1e-15);
        let (_, v) = continuous_max_moments(ContinuousSimplex { n: 100 });
        assert!((v * 1e4 - 1.352_371_331_762_141).abs() < 1e-12);
    }

    #[test]
    fn gumbel_examples() {
        assert!((gumbel_cdf(0.0) - (-1f64).exp()).abs() < 1e-16);
        assert_eq!(gumbel_cdf(50.0), 1.0);
        // mean = ∫ x dF(x) by the trapezoid rule on the density
        let (a, b, steps) = (-10.0, 40.0, 200_000);
        let h = (b - a) / steps as f64;
        let dens = |x: f64| (-x).exp() * gumbel_cdf(x);
        let mut s = 0.5 * (a * dens(a) + b * dens(b));
        for i in 1..steps {
            let x = a + i as f64 * h;
            s += x * dens(x);
        }
        assert!((s * h - 0.577_215_664_901_532_9).abs() < 1e-8);
    }

    #[test]
    fn negbin_examples() {
        let p = negbin_local_pmf(1, 0.3, 4);
        assert!((p.exact - 0.7 * 0.3f64.powi(4)).abs() < 1e-15);
        let p = negbin_local_pmf(10_000, 0.5, 10_000);
        assert!((p.ratio() - 1.0).abs() < 0.01);
    }
}

//! Exact finite-instance laws of the product form π(l) ∝ (m)_{|l|} Πᵢ κᵢ^{−lᵢ}.
//!
//! Everything is organized around the total number of customers at the queues, k = |L|:
//! P[|L| = k] ∝ (m)_k κ₁^{−k} Q(k), where Q is the generating coefficient of the levels
//! (Q(k) = C(n+k−1, n−1) in the homogeneous case). Conditional on k, the queues are
//! uniform (homogeneous) or geometric-tilted (grouped), which yields every other law.

use super::compositions::{ln_bounded_compositions, simplex_max_cdf};
use super::pmf::Pmf;
use crate::error::{Error, Result};
use crate::model::{Level, NetworkSpec};
use crate::numerics::{ln_binomial, ln_falling, ln_gamma, ln_gamma_diff, lse, LogWeight, NeumaierSum};
use rayon::prelude::*;

/// Terms more than this many nats below the largest are dropped from windows and convolutions.
pub(crate) const CUTOFF: f64 = 60.0;
pub const JOINT_CDF_MAX_QUEUES: u64 = 8;

/// ln of a nonnegative sequence, stored on `lo..=hi`; −∞ elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LogSeq {
    pub lo: usize,
    pub vals: Vec<f64>,
}

impl LogSeq {
    pub fn delta() -> LogSeq {
        LogSeq { lo: 0, vals: vec![0.0] }
    }

    pub fn hi(&self) -> usize {
        self.lo + self.vals.len() - 1
    }

    pub fn get(&self, k: usize) -> f64 {
        if k < self.lo || k > self.hi() {
            f64::NEG_INFINITY
        } else {
            self.vals[k - self.lo]
        }
    }

    /// Keep the leading run of finite values (the support of a log-concave sequence).
    fn from_prefix(lo: usize, vals: Vec<f64>) -> LogSeq {
        let start = vals.iter().position(|v| v.is_finite()).unwrap_or(0);
        let len = vals[start..].iter().position(|v| !v.is_finite()).unwrap_or(vals.len() - start);
        if len == 0 {
            return LogSeq { lo: 0, vals: vec![f64::NEG_INFINITY] };
        }
        LogSeq { lo: lo + start, vals: vals[start..start + len].to_vec() }
    }

    fn is_zero(&self) -> bool {
        self.vals.len() == 1 && self.vals[0] == f64::NEG_INFINITY
    }
}

/// ϱᵏ C(count+k−1, count−1), k = 0..=kmax.
pub(crate) fn unbounded_level(count: u64, ln_rho: f64, kmax: usize) -> LogSeq {
    if count == 0 || ln_rho == f64::NEG_INFINITY {
        return LogSeq::delta();
    }
    let c = (count - 1) as f64;
    let vals = (0..=kmax).map(|k| k as f64 * ln_rho + ln_binomial(c + k as f64, c)).collect();
    LogSeq { lo: 0, vals }
}

/// ϱᵏ N(k, count, j), k = 0..=min(kmax, count·j).
pub(crate) fn bounded_level(count: u64, ln_rho: f64, j: u64, kmax: usize) -> LogSeq {
    if count == 0 || ln_rho == f64::NEG_INFINITY {
        return LogSeq::delta();
    }
    let top = (count as u128 * j as u128).min(kmax as u128) as usize;
    let vals = (0..=top)
        .map(|k| {
            let v = ln_bounded_compositions(k as u64, count, j);
            if k == 0 {
                v
            } else {
                v + k as f64 * ln_rho
            }
        })
        .collect();
    LogSeq::from_prefix(0, vals)
}

/// Log-space convolution of two log-concave sequences, truncated at `kmax`.
/// For each output index the summand is concave in the split point, so it is located by
/// ternary search and summed outward until it falls `CUTOFF` nats below its peak.
pub(crate) fn concave_conv(a: &LogSeq, b: &LogSeq, kmax: usize) -> LogSeq {
    if a.is_zero() || b.is_zero() {
        return LogSeq { lo: 0, vals: vec![f64::NEG_INFINITY] };
    }
    let lo = a.lo + b.lo;
    let hi = (a.hi() + b.hi()).min(kmax);
    if lo > hi {
        return LogSeq { lo: 0, vals: vec![f64::NEG_INFINITY] };
    }
    let vals: Vec<f64> = (lo..=hi)
        .into_par_iter()
        .map(|k| {
            let s_lo = a.lo.max(k.saturating_sub(b.hi()));
            let s_hi = a.hi().min(k - b.lo);
            let f = |s: usize| a.vals[s - a.lo] + b.vals[k - s - b.lo];
            let (mut l, mut r) = (s_lo, s_hi);
            while r - l > 2 {
                let m1 = l + (r - l) / 3;
                let m2 = r - (r - l) / 3;
                if f(m1) < f(m2) {
                    l = m1 + 1;
                } else {
                    r = m2;
                }
            }
            let (mut peak, mut fmax) = (l, f(l));
            for s in l + 1..=r {
                let v = f(s);
                if v > fmax {
                    peak = s;
                    fmax = v;
                }
            }
            let mut sum = NeumaierSum::default();
            sum.add(1.0);
            let mut s = peak;
            while s > s_lo {
                s -= 1;
                let d = f(s) - fmax;
                if d < -CUTOFF {
                    break;
                }
                sum.add(d.exp());
            }
            let mut s = peak;
            while s < s_hi {
                s += 1;
                let d = f(s) - fmax;
                if d < -CUTOFF {
                    break;
                }
                sum.add(d.exp());
            }
            fmax + sum.value().ln()
        })
        .collect();
    LogSeq { lo, vals }
}

fn conv_all(seqs: Vec<LogSeq>, kmax: usize) -> LogSeq {
    let mut it = seqs.into_iter();
    let first = it.next().unwrap_or_else(LogSeq::delta);
    it.fold(first, |acc, s| concave_conv(&acc, &s, kmax))
}

/// The law of k = |L| together with everything needed to condition on it.
#[derive(Clone, Debug)]
pub(crate) struct Population {
    pub m: u64,
    pub levels: Vec<Level>,
    /// ln ϱ_g = ln(κ₁/κ_g) per level
    pub ln_rho: Vec<f64>,
    /// ln (m)_k κ₁^{−k} for k = 0..=m (relative to an arbitrary constant when κ₁ = 0)
    pub ln_hub: Vec<f64>,
    /// ln Q(k) for k = 0..=m
    pub ln_q: LogSeq,
    /// ln Σ_k hub(k) Q(k)
    pub ln_z: f64,
    /// window of k holding all but e^{−CUTOFF} of the mass
    pub lo: usize,
    pub hi: usize,
}

impl Population {
    pub fn new(spec: &NetworkSpec) -> Result<Population> {
        let levels = spec.levels()?;
        let m = spec.m;
        let mu = m as usize;
        let k1 = levels[0].kappa;
        let ln_rho: Vec<f64> = levels
            .iter()
            .enumerate()
            .map(|(g, l)| if g == 0 { 0.0 } else if k1 == 0.0 { f64::NEG_INFINITY } else { (k1 / l.kappa).ln() })
            .collect();
        let ln_hub: Vec<f64> = if k1 == 0.0 {
            (0..=m).map(|k| if k == m { 0.0 } else { f64::NEG_INFINITY }).collect()
        } else {
            let lk = k1.ln();
            (0..=m).map(|k| ln_falling(m, k) - k as f64 * lk).collect()
        };
        let ln_q = if levels.len() == 1 {
            unbounded_level(levels[0].count, 0.0, mu)
        } else {
            let seqs = levels.iter().zip(&ln_rho).map(|(l, &r)| unbounded_level(l.count, r, mu)).collect();
            conv_all(seqs, mu)
        };
        let ln_w: Vec<f64> = (0..=mu).map(|k| ln_hub[k] + ln_q.get(k)).collect();
        let ln_z = lse(&ln_w);
        if !ln_z.is_finite() {
            return Err(Error::OverflowGuard(format!("log partition sum is {ln_z}")));
        }
        let peak = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ln_w.iter().position(|&v| v >= peak - CUTOFF).unwrap_or(0);
        let hi = ln_w.iter().rposition(|&v| v >= peak - CUTOFF).unwrap_or(mu);
        Ok(Population { m, levels, ln_rho, ln_hub, ln_q, ln_z, lo, hi })
    }

    /// ln P[|L| = k]
    pub fn ln_prob(&self, k: usize) -> f64 {
        self.ln_hub[k] + self.ln_q.get(k) - self.ln_z
    }

    pub fn n(&self) -> u64 {
        self.levels.iter().map(|l| l.count).sum()
    }

    pub fn window(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }

    /// Level of queue `q` (canonical order).
    pub fn level_of(&self, q: u64) -> Option<usize> {
        let mut acc = 0;
        for (g, l) in self.levels.iter().enumerate() {
            acc += l.count;
            if q < acc {
                return Some(g);
            }
        }
        None
    }
}

/// Normalizing constant c_{m,n} computed two ways, for homogeneous networks.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct PartitionFunction {
    pub m: u64,
    pub n: u64,
    /// Direct sum of the product-form weights over k = |l|.
    pub log_c: LogWeight,
    /// E[(m+n−1−M)_{n−1} 1{M ≤ m}] / ((n−1)! P[M=m]) with M ~ Poisson(κ).
    pub log_c_poisson: LogWeight,
}

impl PartitionFunction {
    pub fn relative_gap(&self) -> f64 {
        (self.log_c_poisson.ln() - self.log_c.ln()).exp_m1().abs()
    }
}

pub fn partition_function(spec: &NetworkSpec) -> Result<PartitionFunction> {
    let levels = spec.levels()?;
    if levels.len() != 1 {
        return Err(Error::InvalidSpec("partition function needs a homogeneous spec".into()));
    }
    let (m, n, kappa) = (spec.m, levels[0].count, levels[0].kappa);
    if kappa == 0.0 {
        return Err(Error::OverflowGuard("c_{m,n} is infinite at kappa = 0".into()));
    }
    let lk = kappa.ln();
    let nm1 = (n - 1) as f64;
    let direct: Vec<f64> =
        (0..=m).map(|k| ln_binomial(nm1 + k as f64, nm1) + ln_falling(m, k) - k as f64 * lk).collect();
    let ln_pois = |i: u64| -kappa + i as f64 * lk - ln_gamma(i as f64 + 1.0);
    let poisson: Vec<f64> =
        (0..=m).map(|i| ln_pois(i) + ln_gamma_diff((m - i) as f64 + 1.0, nm1)).collect();
    let log_c = lse(&direct);
    let log_c_poisson = lse(&poisson) - ln_gamma(nm1 + 1.0) - ln_pois(m);
    if !log_c.is_finite() || !log_c_poisson.is_finite() {
        return Err(Error::OverflowGuard(format!("log c = {log_c}, {log_c_poisson}")));
    }
    let pf = PartitionFunction { m, n, log_c: LogWeight(log_c), log_c_poisson: LogWeight(log_c_poisson) };
    if pf.relative_gap() > 1e-8 {
        return Err(Error::MethodsDisagree(pf.relative_gap()));
    }
    Ok(pf)
}

/// Law of |L| on 0..=m.
pub fn total_population_law(spec: &NetworkSpec) -> Result<Pmf> {
    let pop = Population::new(spec)?;
    let ln_w: Vec<f64> = (0..=pop.m as usize).map(|k| pop.ln_hub[k] + pop.ln_q.get(k)).collect();
    Ok(Pmf::from_log_weights(0, &ln_w))
}

/// Law of the hub count M = m − |L| on 0..=m.
pub fn hub_law(spec: &NetworkSpec) -> Result<Pmf> {
    let total = total_population_law(spec)?;
    let masses: Vec<f64> = total.masses().iter().rev().copied().collect();
    Ok(Pmf::from_masses(0, masses))
}

/// Law of L_q (canonical queue order, 0-based) on 0..=m.
pub fn marginal_law(spec: &NetworkSpec, queue: u64) -> Result<Pmf> {
    let pop = Population::new(spec)?;
    let g = pop
        .level_of(queue)
        .ok_or_else(|| Error::InvalidSpec(format!("queue index {queue} out of range (n = {})", pop.n())))?;
    let hi = pop.hi;
    // Q with one queue of level g removed
    let seqs: Vec<LogSeq> = pop
        .levels
        .iter()
        .enumerate()
        .map(|(h, l)| unbounded_level(if h == g { l.count - 1 } else { l.count }, pop.ln_rho[h], hi))
        .collect();
    let rest = conv_all(seqs, hi);
    let ln_rho = pop.ln_rho[g];
    let ln_pi: Vec<f64> = pop.window().map(|k| pop.ln_prob(k) - pop.ln_q.get(k)).collect();
    let ln_w: Vec<f64> = (0..=hi)
        .into_par_iter()
        .map(|j| {
            if j > 0 && ln_rho == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            let tilt = if j == 0 { 0.0 } else { j as f64 * ln_rho };
            let terms: Vec<f64> =
                pop.window().filter(|&k| k >= j).map(|k| ln_pi[k - pop.lo] + rest.get(k - j) + tilt).collect();
            lse(&terms)
        })
        .collect();
    let mut masses: Vec<f64> = ln_w.iter().map(|v| v.exp()).collect();
    masses.resize(pop.m as usize + 1, 0.0);
    Ok(Pmf::from_masses(0, masses))
}

const J_BLOCK: usize = 128;

/// Law of max L on 0..=m.
pub fn max_law(spec: &NetworkSpec) -> Result<Pmf> {
    let pop = Population::new(spec)?;
    let (cdf, surv) = if pop.levels.len() == 1 { max_cdf_homogeneous(&pop) } else { max_cdf_grouped(&pop) };
    let m = pop.m as usize;
    let mut masses = vec![0.0; m + 1];
    for j in 0..cdf.len() {
        masses[j] = if j == 0 {
            cdf[0]
        } else if cdf[j - 1] < 0.5 {
            cdf[j] - cdf[j - 1]
        } else {
            surv[j - 1] - surv[j]
        }
        .max(0.0);
    }
    if cdf.len() <= m {
        // everything above the computed range: the leftover survival mass
        masses[cdf.len()] = surv[cdf.len() - 1].max(0.0);
    }
    Ok(Pmf::from_masses(0, masses))
}

/// P[max ≤ j] and P[max > j] for j = 0, 1, … until the survival underflows or j reaches the window top.
fn max_cdf_homogeneous(pop: &Population) -> (Vec<f64>, Vec<f64>) {
    let n = pop.levels[0].count;
    let weights: Vec<(u64, f64)> = pop.window().map(|k| (k as u64, pop.ln_prob(k).exp())).collect();
    let eval = |j: usize| -> (f64, f64) {
        let mut c = NeumaierSum::default();
        let mut s = NeumaierSum::default();
        for &(k, w) in &weights {
            let d = simplex_max_cdf(k, n, j as u64);
            c.add(w * d.cdf);
            s.add(w * d.survival);
        }
        (c.value(), s.value())
    };
    sweep_j(pop.hi, eval)
}

fn max_cdf_grouped(pop: &Population) -> (Vec<f64>, Vec<f64>) {
    let hi = pop.hi;
    let eval = |j: usize| -> (f64, f64) {
        let seqs: Vec<LogSeq> = pop
            .levels
            .iter()
            .zip(&pop.ln_rho)
            .map(|(l, &r)| bounded_level(l.count, r, j as u64, hi))
            .collect();
        let q = conv_all(seqs, hi);
        let terms: Vec<f64> = pop.window().map(|k| pop.ln_hub[k] + q.get(k) - pop.ln_z).collect();
        let c = lse(&terms).exp().min(1.0);
        (c, 1.0 - c)
    };
    sweep_j(hi, eval)
}

fn sweep_j<F: Fn(usize) -> (f64, f64) + Sync>(hi: usize, eval: F) -> (Vec<f64>, Vec<f64>) {
    let mut cdf = Vec::new();
    let mut surv = Vec::new();
    let mut start = 0usize;
    loop {
        let end = (start + J_BLOCK).min(hi + 1);
        let block: Vec<(f64, f64)> = (start..end).into_par_iter().map(&eval).collect();
        for (c, s) in block {
            cdf.push(c);
            surv.push(s);
        }
        if end > hi || *surv.last().unwrap() <= 0.0 {
            break;
        }
        start = end;
    }
    (cdf, surv)
}

/// P[L ≤ l] componentwise, for at most `JOINT_CDF_MAX_QUEUES` queues.
pub fn joint_cdf(spec: &NetworkSpec, l: &[u64]) -> Result<f64> {
    let pop = Population::new(spec)?;
    let n = pop.n();
    if n > JOINT_CDF_MAX_QUEUES {
        return Err(Error::DimensionTooLarge { n, limit: JOINT_CDF_MAX_QUEUES });
    }
    if l.len() as u64 != n {
        return Err(Error::InvalidSpec(format!("bound vector has {} entries, network has {n} queues", l.len())));
    }
    let hi = pop.hi;
    let seqs: Vec<LogSeq> = l
        .iter()
        .enumerate()
        .map(|(q, &b)| {
            let r = pop.ln_rho[pop.level_of(q as u64).unwrap()];
            if r == f64::NEG_INFINITY {
                return LogSeq::delta();
            }
            let top = (b as usize).min(hi);
            LogSeq { lo: 0, vals: (0..=top).map(|t| if t == 0 { 0.0 } else { t as f64 * r }).collect() }
        })
        .collect();
    let q = conv_all(seqs, hi);
    let terms: Vec<f64> = pop.window().map(|k| pop.ln_hub[k] + q.get(k) - pop.ln_z).collect();
    Ok(lse(&terms).exp().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-13
    }

    #[test]
    fn two_by_two_network() {
        let spec = NetworkSpec::homogeneous(2, 2, 1.0);
        let pf = partition_function(&spec).unwrap();
        assert!((pf.log_c.linear() - 11.0).abs() < 1e-12);
        assert!((pf.log_c_poisson.linear() - 11.0).abs() < 1e-12);
        let t = total_population_law(&spec).unwrap();
        assert!(close(t.pmf(0), 1.0 / 11.0) && close(t.pmf(1), 4.0 / 11.0) && close(t.pmf(2), 6.0 / 11.0));
        let mg = marginal_law(&spec, 0).unwrap();
        assert!(close(mg.pmf(0), 5.0 / 11.0) && close(mg.pmf(1), 4.0 / 11.0) && close(mg.pmf(2), 2.0 / 11.0));
        let mx = max_law(&spec).unwrap();
        assert!(close(mx.cdf(0), 1.0 / 11.0) && close(mx.cdf(1), 7.0 / 11.0) && close(mx.cdf(2), 1.0));
        assert!(close(joint_cdf(&spec, &[1, 1]).unwrap(), 7.0 / 11.0));
        assert!(close(joint_cdf(&spec, &[0, 2]).unwrap(), 5.0 / 11.0));
        assert!(close(joint_cdf(&spec, &[2, 2]).unwrap(), 1.0));
    }

    #[test]
    fn single_queue() {
        let kappa = 3.5;
        let pf = partition_function(&NetworkSpec::homogeneous(1, 1, kappa)).unwrap();
        assert!((pf.log_c.linear() - (1.0 + 1.0 / kappa)).abs() < 1e-14);
        let t = total_population_law(&NetworkSpec::homogeneous(1, 1, 1.0)).unwrap();
        assert!(close(t.pmf(0), 0.5) && close(t.pmf(1), 0.5));
    }

    #[test]
    fn grouped_total() {
        let spec = NetworkSpec::grouped(1, &[(1, 1.0), (1, 2.0)]);
        let t = total_population_law(&spec).unwrap();
        assert!(close(t.pmf(1), 0.6));
        let mx = max_law(&spec).unwrap();
        assert!(close(mx.pmf(1), 0.6));
        let m1 = marginal_law(&spec, 1).unwrap();
        assert!(close(m1.pmf(1), 0.2));
    }

    #[test]
    fn grouped_with_equal_kappas_matches_homogeneous() {
        let h = NetworkSpec::homogeneous(40, 5, 30.0);
        let pop = Population::new(&h).unwrap();
        let hom = max_cdf_homogeneous(&pop);
        let mut grouped_pop = pop.clone();
        grouped_pop.levels = vec![Level { count: 2, kappa: 30.0 }, Level { count: 3, kappa: 30.0 }];
        grouped_pop.ln_rho = vec![0.0, 0.0];
        let grp = max_cdf_grouped(&grouped_pop);
        for (a, b) in hom.0.iter().zip(&grp.0) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn degenerate_kappa_zero() {
        let spec = NetworkSpec::homogeneous(10, 2, 0.0);
        let t = total_population_law(&spec).unwrap();
        assert_eq!(t.pmf(10), 1.0);
        let mx = max_law(&spec).unwrap();
        // max of a uniform composition of 10 into 2 parts: 5..=10 with masses 1,2,2,2,2,2 / 11
        assert!(close(mx.pmf(5), 1.0 / 11.0));
        assert!(close(mx.pmf(10), 2.0 / 11.0));
    }

    #[test]
    fn dimension_guard() {
        let spec = NetworkSpec::homogeneous(3, 9, 1.0);
        assert!(matches!(joint_cdf(&spec, &[1; 9]), Err(Error::DimensionTooLarge { .. })));
    }
}

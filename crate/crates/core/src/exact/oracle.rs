//! Brute-force enumeration of the product form in exact rational arithmetic.
//!
//! Each κ_g is converted exactly to p_g/q_g, and the state weight (m)_k Π κᵢ^{−lᵢ} is scaled by
//! Π_g p_g^m to the integer (m)_k Π_g q_g^{t_g} p_g^{m−t_g}, t_g being the customers in level g.

use super::pmf::Pmf;
use crate::error::{Error, Result};
use crate::model::NetworkSpec;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub const ORACLE_MAX_STATES: f64 = 1e6;

pub struct Oracle {
    m: u64,
    n: usize,
    states: Vec<Vec<u64>>,
    weights: Vec<BigUint>,
    total: BigUint,
    /// Π_g p_g^m, the weight of the empty state
    empty: BigUint,
}

fn exact_ratio(x: f64) -> (BigUint, BigUint) {
    let r = BigRational::from_float(x).expect("finite kappa");
    (r.numer().to_biguint().unwrap(), r.denom().to_biguint().unwrap())
}

fn to_f64(num: &BigUint, den: &BigUint) -> f64 {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone())).to_f64().unwrap_or(0.0)
}

impl Oracle {
    pub fn new(spec: &NetworkSpec) -> Result<Oracle> {
        let levels = spec.levels()?;
        let m = spec.m;
        let n: u64 = levels.iter().map(|l| l.count).sum();
        let states_count = (crate::numerics::ln_binomial((m + n) as f64, n as f64)).exp();
        if states_count > ORACLE_MAX_STATES * (1.0 + 1e-9) {
            return Err(Error::StateSpaceTooLarge { states: states_count.round(), limit: ORACLE_MAX_STATES });
        }
        let level_of: Vec<usize> = levels
            .iter()
            .enumerate()
            .flat_map(|(g, l)| std::iter::repeat(g).take(l.count as usize))
            .collect();
        let fracs: Vec<(BigUint, BigUint)> = levels.iter().map(|l| exact_ratio(l.kappa)).collect();
        let pow = |b: &BigUint, e: u64| -> BigUint {
            if e == 0 {
                BigUint::one()
            } else {
                b.pow(e as u32)
            }
        };
        // den_pow[g][t] = q_g^t p_g^{m−t}
        let level_pow: Vec<Vec<BigUint>> = fracs
            .iter()
            .map(|(p, q)| (0..=m).map(|t| pow(q, t) * pow(p, m - t)).collect())
            .collect();
        let falling: Vec<BigUint> = {
            let mut v = vec![BigUint::one()];
            for k in 1..=m {
                let next = v.last().unwrap() * BigUint::from(m - k + 1);
                v.push(next);
            }
            v
        };
        let empty = level_pow.iter().fold(BigUint::one(), |acc, row| acc * &row[0]);
        let mut states = Vec::new();
        let mut weights = Vec::new();
        let mut total = BigUint::zero();
        let mut l = vec![0u64; n as usize];
        loop {
            let k: u64 = l.iter().sum();
            let mut per_level = vec![0u64; levels.len()];
            for (i, &x) in l.iter().enumerate() {
                per_level[level_of[i]] += x;
            }
            let mut w = falling[k as usize].clone();
            for (g, &t) in per_level.iter().enumerate() {
                w *= &level_pow[g][t as usize];
            }
            total += &w;
            states.push(l.clone());
            weights.push(w);
            // next vector with |l| ≤ m in lexicographic order (last coordinate fastest)
            let mut i = n as usize;
            loop {
                if i == 0 {
                    return Ok(Oracle { m, n: n as usize, states, weights, total, empty });
                }
                i -= 1;
                if l.iter().sum::<u64>() < m {
                    l[i] += 1;
                    break;
                }
                l[i] = 0;
            }
        }
    }

    pub fn states(&self) -> &[Vec<u64>] {
        &self.states
    }

    /// π(l) as an exact rational.
    pub fn probability(&self, idx: usize) -> BigRational {
        BigRational::new(BigInt::from(self.weights[idx].clone()), BigInt::from(self.total.clone()))
    }

    pub fn probabilities(&self) -> Vec<(Vec<u64>, f64)> {
        self.states.iter().zip(&self.weights).map(|(s, w)| (s.clone(), to_f64(w, &self.total))).collect()
    }

    /// c_{m,n} = 1/π(0).
    pub fn partition_function(&self) -> f64 {
        to_f64(&self.total, &self.empty)
    }

    fn law_by<F: Fn(&[u64]) -> usize>(&self, key: F) -> Pmf {
        let mut acc = vec![BigUint::zero(); self.m as usize + 1];
        for (s, w) in self.states.iter().zip(&self.weights) {
            acc[key(s)] += w;
        }
        Pmf::from_masses(0, acc.iter().map(|w| to_f64(w, &self.total)).collect())
    }

    pub fn total_population_law(&self) -> Pmf {
        self.law_by(|s| s.iter().sum::<u64>() as usize)
    }

    pub fn marginal_law(&self, queue: usize) -> Pmf {
        self.law_by(|s| s[queue] as usize)
    }

    pub fn max_law(&self) -> Pmf {
        self.law_by(|s| s.iter().copied().max().unwrap_or(0) as usize)
    }

    pub fn joint_cdf(&self, bound: &[u64]) -> f64 {
        let mut acc = BigUint::zero();
        for (s, w) in self.states.iter().zip(&self.weights) {
            if s.iter().zip(bound).all(|(x, b)| x <= b) {
                acc += w;
            }
        }
        to_f64(&acc, &self.total)
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_states() {
        let o = Oracle::new(&NetworkSpec::homogeneous(2, 2, 1.0)).unwrap();
        let p: std::collections::HashMap<Vec<u64>, BigRational> =
            (0..o.states().len()).map(|i| (o.states()[i].clone(), o.probability(i))).collect();
        assert_eq!(p.len(), 6);
        let r = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
        assert_eq!(p[&vec![0, 0]], r(1, 11));
        for s in [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2]] {
            assert_eq!(p[&s.to_vec()], r(2, 11));
        }
        assert!((o.partition_function() - 11.0).abs() < 1e-12);
    }

    #[test]
    fn single_queue_and_grouped() {
        let o = Oracle::new(&NetworkSpec::homogeneous(1, 1, 4.0)).unwrap();
        let probs = o.probabilities();
        assert!((probs[0].1 - 0.8).abs() < 1e-15 && (probs[1].1 - 0.2).abs() < 1e-15);
        let o = Oracle::new(&NetworkSpec::grouped(1, &[(1, 1.0), (1, 2.0)])).unwrap();
        let probs = o.probabilities();
        let w: Vec<f64> = probs.iter().map(|(_, p)| p * 2.5).collect();
        assert_eq!(probs.len(), 3);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 0.5).abs() < 1e-14 && (w[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn too_large() {
        assert!(matches!(Oracle::new(&NetworkSpec::homogeneous(100, 10, 1.0)), Err(Error::StateSpaceTooLarge { .. })));
    }
}

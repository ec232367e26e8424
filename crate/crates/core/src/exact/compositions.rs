//! Bounded compositions N(k, n, j) = #{x ∈ ℕⁿ : |x| = k, max x ≤ j} and the uniform-simplex
//! maximum law D(k, n, j) = N(k, n, j)/C(k+n−1, n−1).
//!
//! The inclusion–exclusion sum alternates, so it is evaluated in stages: plain f64, then
//! double-double (via the exact integer ratio recurrence), then big integers. The
//! negative-association bound D ≤ (1 − R₁)ⁿ with R₁ = P[X₁ > j] short-circuits the deep
//! lower tail, where the answer is below 1e-16 anyway.

use crate::numerics::{ln_binomial, ln_gamma_diff, NeumaierSum};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use twofloat::TwoFloat;

/// P[max ≤ j] and P[max > j] for a uniform point of the discrete simplex Δⁿ_k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexMaxProb {
    pub cdf: f64,
    pub survival: f64,
}

impl SimplexMaxProb {
    const ONE: SimplexMaxProb = SimplexMaxProb { cdf: 1.0, survival: 0.0 };
    const ZERO: SimplexMaxProb = SimplexMaxProb { cdf: 0.0, survival: 1.0 };

    fn from_survival(s: f64) -> SimplexMaxProb {
        let s = s.clamp(0.0, 1.0);
        SimplexMaxProb { cdf: 1.0 - s, survival: s }
    }

    fn from_cdf(c: f64) -> SimplexMaxProb {
        let c = c.clamp(0.0, 1.0);
        SimplexMaxProb { cdf: c, survival: 1.0 - c }
    }
}

/// Below this value of the negative-association bound the CDF is reported as 0.
pub const LOWER_TAIL_FLOOR: f64 = 1e-16;
const REL_TARGET: f64 = 1e-10;
const ABS_TARGET: f64 = 1e-18;
const EXACT_MAX_N: u64 = 400;

fn target(v: f64) -> f64 {
    (REL_TARGET * v.abs()).max(ABS_TARGET)
}

/// ln R_i with R_i = C(k − i(j+1) + n − 1, n − 1)/C(k + n − 1, n − 1); returns (value, magnitude).
fn ln_ratio(k: u64, n: u64, j: u64, i: u64) -> (f64, f64) {
    let d = (i * (j + 1)) as f64;
    let bi = (k - i * (j + 1)) as f64 + 1.0;
    let nm1 = (n - 1) as f64;
    let (a, b) = if d <= nm1 {
        (ln_gamma_diff(bi, d), ln_gamma_diff(bi + nm1, d))
    } else {
        (ln_gamma_diff(bi, nm1), ln_gamma_diff(k as f64 + 1.0, nm1))
    };
    (a - b, a.abs() + b.abs())
}

struct Partial {
    cdf: f64,
    survival: f64,
    err: f64,
}

fn choose_result(p: &Partial) -> Option<SimplexMaxProb> {
    let small = p.cdf.min(p.survival).max(0.0);
    if p.err <= target(small) {
        Some(if p.survival <= 0.5 {
            SimplexMaxProb::from_survival(p.survival)
        } else {
            SimplexMaxProb::from_cdf(p.cdf)
        })
    } else {
        None
    }
}

/// Geometric tail bound for a log-concave positive sequence once past its peak.
fn remaining_bound(t: f64, prev: f64) -> Option<f64> {
    if prev > 0.0 && t < prev {
        let r = t / prev;
        Some(t * r / (1.0 - r))
    } else if t == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

const FACTOR_LIMIT: u64 = 48;

fn stage_f64(k: u64, n: u64, j: u64, imax: u64) -> Partial {
    let eps = f64::EPSILON;
    let factors = (j + 1).min(n - 1);
    let recurrence = factors <= FACTOR_LIMIT;
    let mut cdf = NeumaierSum::default();
    cdf.add(1.0);
    let mut surv = NeumaierSum::default();
    let mut err = 0.0;
    let mut prev = 1.0f64;
    let mut t1 = 0.0;
    let mut t = 1.0f64;
    let mut rel = 0.0f64;
    for i in 1..=imax {
        if recurrence {
            t *= (n - i + 1) as f64 / i as f64;
            let b = (k - i * (j + 1)) as f64 + 1.0;
            let nm1 = (n - 1) as f64;
            if j + 1 <= n - 1 {
                for s in 0..=j {
                    t *= (b + s as f64) / (b + nm1 + s as f64);
                }
            } else {
                let prev_top = (k - (i - 1) * (j + 1)) as f64;
                let top = (k - i * (j + 1)) as f64;
                for r in 1..n {
                    t *= (top + r as f64) / (prev_top + r as f64);
                }
            }
            rel += (2 * factors + 2) as f64 * eps;
        } else {
            let (lr, mag) = ln_ratio(k, n, j, i);
            let lc = ln_binomial(n as f64, i as f64);
            t = (lc + lr).exp();
            rel = 4.0 * eps * (mag + lc.abs() + 1.0);
        }
        if i == 1 {
            t1 = t;
        }
        if i % 2 == 1 {
            surv.add(t);
            cdf.add(-t);
        } else {
            surv.add(-t);
            cdf.add(t);
        }
        err += t * (rel + 4.0 * eps);
        if let Some(rem) = remaining_bound(t, prev) {
            if rem <= 1e-20 * t1.min(1.0) {
                err += rem;
                break;
            }
        }
        prev = t;
    }
    Partial { cdf: cdf.value(), survival: surv.value(), err }
}

fn stage_dd(k: u64, n: u64, j: u64, imax: u64) -> Partial {
    let unit = 2f64.powi(-104);
    let factors = (j + 1).min(n - 1);
    let mut cdf = TwoFloat::from(1.0);
    let mut surv = TwoFloat::from(0.0);
    let mut t = TwoFloat::from(1.0);
    let mut err = 0.0;
    let mut prev = 1.0f64;
    let mut t1 = 0.0;
    for i in 1..=imax {
        t = t * ((n - i + 1) as f64) / (i as f64);
        let b = (k - i * (j + 1)) as f64 + 1.0;
        if j + 1 <= n - 1 {
            let nm1 = (n - 1) as f64;
            for s in 0..=j {
                t = t * (b + s as f64) / (b + nm1 + s as f64);
            }
        } else {
            let prev_top = (k - (i - 1) * (j + 1)) as f64;
            let top = b - 1.0;
            for r in 1..n {
                t = t * (top + r as f64) / (prev_top + r as f64);
            }
        }
        let tf = f64::from(t);
        if i == 1 {
            t1 = tf;
        }
        if i % 2 == 1 {
            surv += t;
            cdf -= t;
        } else {
            surv -= t;
            cdf += t;
        }
        err += tf * (8.0 * unit * (i * (factors + 1)) as f64 + 8.0 * unit);
        if let Some(rem) = remaining_bound(tf, prev) {
            if rem <= 1e-30 * t1.min(1.0) {
                err += rem;
                break;
            }
        }
        prev = tf;
    }
    Partial { cdf: f64::from(cdf), survival: f64::from(surv), err }
}

fn stage_exact(k: u64, n: u64, j: u64) -> SimplexMaxProb {
    let total = BigInt::from(big_binomial(k + n - 1, n - 1));
    let count = BigInt::from(bounded_compositions(k, n, j));
    let surv = BigRational::new(&total - &count, total.clone()).to_f64().unwrap_or(0.0);
    let cdf = BigRational::new(count, total).to_f64().unwrap_or(0.0);
    SimplexMaxProb { cdf, survival: surv }
}

/// P[max X ≤ j] for X uniform on Δⁿ_k, with the complementary probability kept accurate.
pub fn simplex_max_cdf(k: u64, n: u64, j: u64) -> SimplexMaxProb {
    assert!(n >= 1, "simplex dimension must be positive");
    if j >= k {
        return SimplexMaxProb::ONE;
    }
    if (j as u128) * (n as u128) < k as u128 {
        return SimplexMaxProb::ZERO;
    }
    // here n ≥ 2 and j < k
    let (lr1, _) = ln_ratio(k, n, j, 1);
    let r1 = lr1.exp();
    let ln_upper = n as f64 * (-r1).ln_1p();
    if ln_upper < LOWER_TAIL_FLOOR.ln() {
        return SimplexMaxProb::ZERO;
    }
    let imax = (n).min(k / (j + 1));
    let p = stage_f64(k, n, j, imax);
    if let Some(r) = choose_result(&p) {
        return r;
    }
    let p = stage_dd(k, n, j, imax);
    if let Some(r) = choose_result(&p) {
        return r;
    }
    if n <= EXACT_MAX_N {
        return stage_exact(k, n, j);
    }
    let upper = ln_upper.exp();
    if p.survival <= 0.5 {
        SimplexMaxProb::from_survival(p.survival.max(1.0 - upper))
    } else {
        SimplexMaxProb::from_cdf(p.cdf.min(upper))
    }
}

/// ln N(k, n, j); −∞ when there is no such composition (or it is below the lower-tail floor).
pub fn ln_bounded_compositions(k: u64, n: u64, j: u64) -> f64 {
    let d = simplex_max_cdf(k, n, j).cdf;
    if d <= 0.0 {
        f64::NEG_INFINITY
    } else {
        d.ln() + ln_binomial((k + n - 1) as f64, (n - 1) as f64)
    }
}

pub fn big_binomial(a: u64, b: u64) -> BigUint {
    if b > a {
        return BigUint::zero();
    }
    let b = b.min(a - b);
    let mut r = BigUint::one();
    for t in 1..=b {
        r *= a - b + t;
        r /= t;
    }
    r
}

/// Exact N(k, n, j) by inclusion–exclusion over big integers.
pub fn bounded_compositions(k: u64, n: u64, j: u64) -> BigUint {
    assert!(n >= 1);
    let mut acc = BigInt::zero();
    let imax = n.min(k / (j + 1));
    for i in 0..=imax {
        let term = BigInt::from(big_binomial(n, i)) * BigInt::from(big_binomial(k - i * (j + 1) + n - 1, n - 1));
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc.to_biguint().expect("inclusion-exclusion count is nonnegative")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(k: u64, n: u64, j: u64) -> u64 {
        fn go(k: u64, n: u64, j: u64) -> u64 {
            if n == 0 {
                return (k == 0) as u64;
            }
            (0..=j.min(k)).map(|x| go(k - x, n - 1, j)).sum()
        }
        go(k, n, j)
    }

    #[test]
    fn small_counts_match_brute_force() {
        assert_eq!(bounded_compositions(3, 2, 2), BigUint::from(2u32));
        for n in 1..=5 {
            for k in 0..=9 {
                for j in 0..=9 {
                    assert_eq!(bounded_compositions(k, n, j), BigUint::from(brute(k, n, j)), "{k} {n} {j}");
                    let d = simplex_max_cdf(k, n, j);
                    let exact = brute(k, n, j) as f64 / big_binomial(k + n - 1, n - 1).to_f64().unwrap();
                    assert!((d.cdf - exact).abs() < 1e-14, "{k} {n} {j}: {} vs {exact}", d.cdf);
                    assert!((d.cdf + d.survival - 1.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn edge_identities() {
        assert_eq!(bounded_compositions(7, 4, 7), big_binomial(10, 3));
        assert_eq!(bounded_compositions(13, 4, 3), BigUint::zero());
        assert!((simplex_max_cdf(2, 2, 1).cdf - 1.0 / 3.0).abs() < 1e-15);
    }

    fn exact_pair(k: u64, n: u64, j: u64) -> (f64, f64) {
        let p = stage_exact(k, n, j);
        (p.cdf, p.survival)
    }

    #[test]
    fn staged_evaluation_tracks_big_integers() {
        // mixture of cancellation-heavy lower tails, the bulk, and thin upper tails
        for &(k, n, j) in &[
            (1000u64, 1000u64, 6u64),
            (1000, 1000, 9),
            (1000, 1000, 14),
            (1000, 1000, 30),
            (5000, 300, 40),
            (5000, 300, 80),
            (200_000, 50, 9000),
            (200_000, 50, 30_000),
            (400, 120, 3),
            (400, 120, 25),
        ] {
            let got = simplex_max_cdf(k, n, j);
            let (c, s) = exact_pair(k, n, j);
            if c > 0.0 {
                assert!((got.cdf - c).abs() <= 1e-9 * c + 2e-16, "cdf {k} {n} {j}: {} vs {c}", got.cdf);
            }
            assert!((got.survival - s).abs() <= 1e-9 * s + 1e-18, "surv {k} {n} {j}: {} vs {s}", got.survival);
        }
    }
}

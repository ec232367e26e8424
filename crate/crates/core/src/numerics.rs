//! Scalar kernels shared by every other module: log-space weights, log-gamma
//! differences, harmonic sums, quadratic and monotone root finding, and the
//! Legendre–Fenchel transform.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Div, Mul};

/// A nonnegative quantity stored by its natural logarithm. `ZERO` (−∞) is exact zero.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogWeight(pub f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn from_linear(x: f64) -> LogWeight {
        debug_assert!(x >= 0.0, "LogWeight of a negative number");
        LogWeight(x.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn linear(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn powi(self, k: i64) -> LogWeight {
        if k == 0 {
            LogWeight::ONE
        } else {
            LogWeight(self.0 * k as f64)
        }
    }
}

impl Add for LogWeight {
    type Output = LogWeight;
    fn add(self, rhs: LogWeight) -> LogWeight {
        let (hi, lo) = if self.0 >= rhs.0 { (self.0, rhs.0) } else { (rhs.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return LogWeight(hi);
        }
        LogWeight(hi + (lo - hi).exp().ln_1p())
    }
}

impl Mul for LogWeight {
    type Output = LogWeight;
    fn mul(self, rhs: LogWeight) -> LogWeight {
        if self.is_zero() || rhs.is_zero() {
            return LogWeight::ZERO;
        }
        LogWeight(self.0 + rhs.0)
    }
}

impl Div for LogWeight {
    type Output = LogWeight;
    fn div(self, rhs: LogWeight) -> LogWeight {
        if self.is_zero() {
            return LogWeight::ZERO;
        }
        LogWeight(self.0 - rhs.0)
    }
}

/// Streaming log-sum-exp: the running sum is kept relative to the running maximum.
pub fn log_sum_exp<I: IntoIterator<Item = LogWeight>>(terms: I) -> LogWeight {
    let mut max = f64::NEG_INFINITY;
    let mut acc = 0.0_f64;
    for LogWeight(x) in terms {
        if x == f64::NEG_INFINITY {
            continue;
        }
        if x == f64::INFINITY {
            return LogWeight(f64::INFINITY);
        }
        if x <= max {
            acc += (x - max).exp();
        } else {
            acc = acc * (max - x).exp() + 1.0;
            max = x;
        }
    }
    if max == f64::NEG_INFINITY {
        LogWeight::ZERO
    } else {
        LogWeight(max + acc.ln())
    }
}

/// Two-pass log-sum-exp over raw logs; the workhorse of the exact module.
pub(crate) fn lse(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    let mut s = NeumaierSum::default();
    for &x in xs {
        s.add((x - max).exp());
    }
    max + s.value().ln()
}

/// Neumaier-compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

// Stirling remainder lnΓ(z) − [(z−½)ln z − z + ½ln 2π], accurate to ~1e-17 for z ≥ 15.
fn stirling_tail(z: f64) -> f64 {
    let r = 1.0 / z;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0
                + r2 * (-1.0 / 1680.0 + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360360.0))))))
}

/// lnΓ(x+h) − lnΓ(x) for x > 0, h ≥ 0, without the cancellation of two large log-gammas.
pub fn ln_gamma_diff(x: f64, h: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    if x >= 15.0 {
        let z = x + h;
        (x - 0.5) * (h / x).ln_1p() + h * z.ln() - h + stirling_tail(z) - stirling_tail(x)
    } else {
        ln_gamma(x + h) - ln_gamma(x)
    }
}

pub fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// ln C(a, b) for real a ≥ b ≥ 0.
pub fn ln_binomial(a: f64, b: f64) -> f64 {
    if b < 0.0 || b > a {
        return f64::NEG_INFINITY;
    }
    let b = b.min(a - b);
    if b == 0.0 {
        return 0.0;
    }
    ln_gamma_diff(a - b + 1.0, b) - ln_gamma(b + 1.0)
}

/// ln (m)_k for integers; −∞ when k > m.
pub(crate) fn ln_falling(m: u64, k: u64) -> f64 {
    if k > m {
        f64::NEG_INFINITY
    } else {
        ln_gamma_diff((m - k) as f64 + 1.0, k as f64)
    }
}

/// ln[n(n−1)⋯(n−k+1)] for real n ≥ 0.
pub fn log_falling_factorial(n: f64, k: u64) -> Result<LogWeight> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!("falling factorial base must be finite and ≥ 0, got {n}")));
    }
    if k == 0 {
        return Ok(LogWeight::ONE);
    }
    let base = n - k as f64 + 1.0;
    if base > 0.0 {
        return Ok(LogWeight(ln_gamma_diff(base, k as f64)));
    }
    if n.fract() == 0.0 {
        // the factor n − n = 0 appears
        return Ok(LogWeight::ZERO);
    }
    Err(Error::Domain(format!("({n})_{k} has negative factors")))
}

/// H_k(n) = Σ_{i=1}^n i^{−k}, summed smallest terms first.
pub fn harmonic(n: u64, k: u32) -> f64 {
    let mut s = 0.0;
    for i in (1..=n).rev() {
        s += (i as f64).powi(-(k as i32));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticRoots {
    pub coefficients: (f64, f64, f64),
    pub roots: Vec<f64>,
    pub selected: f64,
}

/// Real roots of a r² + b r + c, ascending, double roots reported once.
pub fn quadratic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b.mul_add(b, -4.0 * a * c);
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    let (r1, r2) = (q / a, c / q);
    if r1 == r2 {
        vec![r1]
    } else if r1 < r2 {
        vec![r1, r2]
    } else {
        vec![r2, r1]
    }
}

/// Roots of a r² + b r + c and the unique one strictly above `lower_bound`.
pub fn solve_quadratic_positive(a: f64, b: f64, c: f64, lower_bound: f64) -> Result<QuadraticRoots> {
    if a == 0.0 && b == 0.0 {
        return Err(Error::Domain("degenerate quadratic".into()));
    }
    let roots = quadratic_real_roots(a, b, c);
    let above: Vec<f64> = roots.iter().copied().filter(|&r| r > lower_bound).collect();
    if above.len() != 1 {
        return Err(Error::NoAdmissibleRoot { bound: lower_bound, found: above.len() });
    }
    Ok(QuadraticRoots { coefficients: (a, b, c), roots, selected: above[0] })
}

/// Root of a continuous monotone `f` on [lo, hi]: Illinois regula falsi with a bisection
/// step every third iteration, stopping once the bracket is narrower than `tol`.
pub fn find_root_monotone<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut side = 0i8;
    for iter in 0..400 {
        if (b - a).abs() <= tol {
            break;
        }
        let mut x = if iter % 3 == 2 { 0.5 * (a + b) } else { (a * fb - b * fa) / (fb - fa) };
        if !(x > a.min(b) && x < a.max(b)) {
            x = 0.5 * (a + b);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

/// Maximizer of a unimodal function on [lo, hi] by golden-section search.
pub(crate) fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) <= 1e-15 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LegendreFenchel {
    pub value: f64,
    pub theta: f64,
    /// The maximizer sits on the cap: the true supremum may be larger (possibly infinite).
    pub at_cap: bool,
}

pub const DEFAULT_THETA_CAP: f64 = 50.0;

/// sup_{θ∈[0,cap]} {−θx − Λ(θ)} for convex Λ with Λ(0) = 0.
pub fn legendre_fenchel<F: Fn(f64) -> f64>(lambda: F, x: f64, theta_cap: f64) -> LegendreFenchel {
    let f = |t: f64| -t * x - lambda(t);
    let (theta, value) = golden_section_max(f, 0.0, theta_cap);
    if value <= 0.0 {
        return LegendreFenchel { value: 0.0, theta: 0.0, at_cap: false };
    }
    // an objective still flat up to the cap means the supremum is not attained below it
    let capped = f(theta_cap);
    if capped >= value - 1e-12 * value.max(1.0) {
        return LegendreFenchel { value: value.max(capped), theta: theta_cap, at_cap: true };
    }
    LegendreFenchel { value, theta, at_cap: false }
}

pub(crate) fn ln_sqrt_2pi() -> f64 {
    0.5 * (2.0 * PI).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_examples() {
        let two = log_sum_exp([LogWeight::ONE, LogWeight::ONE]);
        assert!((two.ln() - 2f64.ln()).abs() < 1e-15);
        let three = log_sum_exp([LogWeight::ZERO, LogWeight(3f64.ln())]);
        assert_eq!(three.ln(), 3f64.ln());
        assert!(log_sum_exp(std::iter::empty()).is_zero());
        let tiny = LogWeight(-300.0 * 10f64.ln());
        let s = log_sum_exp(std::iter::repeat(tiny).take(10_000));
        let want = 4.0 * 10f64.ln() - 300.0 * 10f64.ln();
        assert!((s.ln() - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn zero_is_absorbing_and_identity() {
        let x = LogWeight(1.7);
        assert!((x * LogWeight::ZERO).is_zero());
        assert_eq!(x + LogWeight::ZERO, x);
    }

    #[test]
    fn gamma_diff_matches_direct_products() {
        // Γ(x+h)/Γ(x) = x(x+1)…(x+h−1) for integer h
        for &x in &[0.5, 3.0, 14.9, 15.0, 40.25, 1e3, 1e6] {
            for h in [1u32, 2, 7, 30] {
                let direct: f64 = (0..h).map(|i| (x + i as f64).ln()).sum();
                let got = ln_gamma_diff(x, h as f64);
                assert!((got - direct).abs() < 1e-12 * direct.abs().max(1.0), "x={x} h={h}");
            }
        }
    }

    #[test]
    fn falling_factorial_examples() {
        assert!((log_falling_factorial(5.0, 3).unwrap().ln() - 60f64.ln()).abs() < 1e-14);
        assert_eq!(log_falling_factorial(7.0, 0).unwrap(), LogWeight::ONE);
        assert!(log_falling_factorial(3.0, 4).unwrap().is_zero());
        assert!(log_falling_factorial(2.5, 5).is_err());
    }

    #[test]
    fn harmonic_examples() {
        assert!((harmonic(3, 1) - 11.0 / 6.0).abs() < 1e-15);
        assert_eq!(harmonic(2, 2), 1.25);
        assert!((harmonic(100, 1) - 5.187_377_517_639_621).abs() < 1e-13);
    }

    #[test]
    fn quadratic_examples() {
        assert_eq!(solve_quadratic_positive(1.0, -2.0, 0.0, 1.0).unwrap().selected, 2.0);
        assert_eq!(solve_quadratic_positive(1.0, 0.0, -1.0, 0.0).unwrap().selected, 1.0);
        let g = solve_quadratic_positive(1.0, -3.0, 1.0, 1.0).unwrap().selected;
        assert!((g - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!(matches!(
            solve_quadratic_positive(1.0, -3.0, 2.0, 0.0),
            Err(Error::NoAdmissibleRoot { found: 2, .. })
        ));
        assert!(solve_quadratic_positive(1.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn root_examples() {
        let r = find_root_monotone(|x| x - 2.0, 0.0, 5.0, 1e-12).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        let r = find_root_monotone(|e| -3.0 / e + 1.0, 1.0, 10.0, 1e-12).unwrap();
        assert!((r - 3.0).abs() < 1e-11);
        // case-1 concentration function with κ̄ = 2: g′(ζ) = −ln(1+ζ) + ln ζ + ln 2
        let r = find_root_monotone(|z| -(1.0 + z).ln() + z.ln() + 2f64.ln(), 0.01, 10.0, 1e-12).unwrap();
        assert!((r - 1.0).abs() < 1e-11);
        assert!(matches!(find_root_monotone(|x| x + 1.0, 0.0, 1.0, 1e-9), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn legendre_fenchel_poisson() {
        let k = 2.0;
        let lam = |t: f64| k * ((-t).exp() - 1.0);
        let at_mean = legendre_fenchel(lam, k, DEFAULT_THETA_CAP);
        assert!(at_mean.value.abs() < 1e-12);
        let below = legendre_fenchel(lam, 1.0, DEFAULT_THETA_CAP);
        assert!((below.value - (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!(!below.at_cap);
        assert_eq!(legendre_fenchel(lam, 3.0, DEFAULT_THETA_CAP).value, 0.0);
        // x = 0: the supremum is κ̄ approached only as θ → ∞
        assert!(legendre_fenchel(lam, 0.0, DEFAULT_THETA_CAP).at_cap);
    }
}

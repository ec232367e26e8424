//! Limit theory: concentration diagnostics, geometric tail constants η, simplex-limit
//! approximations and the log-MGF / rate-function machinery for grouped networks.

use crate::error::{Error, Result};
use crate::model::{self, NetworkSpec, DEFAULT_BAND, SCALE_SEPARATION};
use crate::numerics::{
    find_root_monotone, harmonic, legendre_fenchel, ln_gamma, ln_gamma_diff, solve_quadratic_positive,
    LegendreFenchel, DEFAULT_THETA_CAP,
};
use serde::Serialize;
use std::f64::consts::PI;

/// Limiting log-MGF of M + |L| scaled by m:
/// Λ(θ) = κ̄₁(e^{−θ} − 1) + Σⱼ fⱼ ln[(1 − ϱⱼ)/(1 − ϱⱼe^{−θ})], bottleneck level excluded.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogMgf {
    pub kappa1: f64,
    /// (fraction fⱼ = nⱼ/m, ratio ϱⱼ = κ₁/κⱼ < 1)
    pub levels: Vec<(f64, f64)>,
}

impl LogMgf {
    pub fn new(kappa1: f64, levels: Vec<(f64, f64)>) -> LogMgf {
        LogMgf { kappa1, levels }
    }

    pub fn poisson(kappa1: f64) -> LogMgf {
        LogMgf { kappa1, levels: Vec::new() }
    }

    pub fn value(&self, theta: f64) -> f64 {
        let e = (-theta).exp();
        let mut v = self.kappa1 * (-theta).exp_m1();
        for &(f, rho) in &self.levels {
            v += f * ((1.0 - rho).ln() - (-rho * e).ln_1p());
        }
        v
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        let e = (-theta).exp();
        let mut d = -self.kappa1 * e;
        for &(f, rho) in &self.levels {
            d -= f * rho * e / (1.0 - rho * e);
        }
        d
    }

    /// Λ′(ln η) = −κ̄₁/η − Σ fⱼϱⱼ/(η − ϱⱼ).
    pub fn derivative_at_ln(&self, eta: f64) -> f64 {
        let mut d = -self.kappa1 / eta;
        for &(f, rho) in &self.levels {
            d -= f * rho / (eta - rho);
        }
        d
    }

    /// κ̄₁ + l̄ = −Λ′(0).
    pub fn mean(&self) -> f64 {
        self.kappa1 + self.levels.iter().map(|(f, r)| f * r / (1.0 - r)).sum::<f64>()
    }

    pub fn check(&self) -> Result<()> {
        if !(self.kappa1 >= 0.0) {
            return Err(Error::Domain(format!("kappa1 must be nonnegative, got {}", self.kappa1)));
        }
        for &(f, rho) in &self.levels {
            if !(f >= 0.0) || !(rho >= 0.0 && rho < 1.0) {
                return Err(Error::Domain(format!("level (f={f}, rho={rho}) needs f ≥ 0 and 0 ≤ rho < 1")));
            }
        }
        Ok(())
    }
}

/// Theorem-1 tail constant: η = κ̄ when n̄ = 0, otherwise the root above 1 of
/// η² − η(n̄ + κ̄ + 1) + κ̄.
pub fn eta_homogeneous(kappa_bar: f64, n_bar: f64) -> Result<f64> {
    if n_bar == 0.0 {
        if kappa_bar > 1.0 {
            return Ok(kappa_bar);
        }
        return Err(Error::NearCritical { ratio: kappa_bar, band: 0.0 });
    }
    Ok(solve_quadratic_positive(1.0, -(n_bar + kappa_bar + 1.0), kappa_bar, 1.0)?.selected)
}

/// Theorem-3 tail constant: root in (1, ∞) of Λ′(ln η) − n̄₁/(η − 1) = −1.
pub fn eta_nonhomogeneous(mgf: &LogMgf, n1_bar: f64) -> Result<f64> {
    mgf.check()?;
    let f = |eta: f64| {
        let pool = if n1_bar > 0.0 { n1_bar / (eta - 1.0) } else { 0.0 };
        mgf.derivative_at_ln(eta) - pool + 1.0
    };
    let lo = 1.0 + 1e-9;
    let mut hi = 2.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 2f64.powi(64) {
            return Err(Error::NoSignChange { lo, hi });
        }
    }
    find_root_monotone(f, lo, hi, 1e-15 * hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometricLocation {
    /// First-order location of max L.
    pub location: f64,
    /// Level (0 = bottleneck) attaining the Theorem-3 minimum.
    pub level: usize,
    pub warnings: Vec<String>,
}

/// ln n / ln η for homogeneous networks; 1 / minⱼ (ln η − ln ϱⱼ)/ln nⱼ for grouped ones,
/// taken over levels with at least two queues.
pub fn max_scaling_geometric(spec: &NetworkSpec, eta: f64) -> Result<GeometricLocation> {
    if !(eta > 1.0) {
        return Err(Error::Domain(format!("eta must exceed 1, got {eta}")));
    }
    let levels = spec.levels()?;
    let ln_eta = eta.ln();
    if levels.len() == 1 {
        return Ok(GeometricLocation {
            location: (levels[0].count as f64).ln() / ln_eta,
            level: 0,
            warnings: Vec::new(),
        });
    }
    let k1 = levels[0].kappa;
    let mut warnings = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    for (j, l) in levels.iter().enumerate() {
        if l.count < 2 {
            warnings.push(format!("level {j} (kappa {}) has {} queue(s) and is excluded from the minimum", l.kappa, l.count));
            continue;
        }
        let ln_rho = if j == 0 { 0.0 } else { (k1 / l.kappa).ln() };
        let rate = (ln_eta - ln_rho) / (l.count as f64).ln();
        if best.map_or(true, |(b, _)| rate < b) {
            best = Some((rate, j));
        }
    }
    match best {
        Some((rate, level)) => Ok(GeometricLocation { location: 1.0 / rate, level, warnings }),
        None => Err(Error::DegenerateGroup("no utilization level has two or more queues".into())),
    }
}

/// Plug-in simplex-regime approximation for max L.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimplexApprox {
    /// Bottleneck count n (or n₁).
    pub n: u64,
    /// m − κ (or m − E M − E|𝙻|).
    pub spread: f64,
    pub mean: f64,
    pub variance: f64,
    pub scale: f64,
    pub location: f64,
}

impl SimplexApprox {
    /// q-quantile of the Gumbel approximation, (m − κ)(x_q + ln n)/n.
    pub fn gumbel_quantile(&self, q: f64) -> f64 {
        self.location + self.scale * -(-q.ln()).ln()
    }

    pub fn gumbel_cdf(&self, v: f64) -> f64 {
        crate::simplex::gumbel_cdf((v - self.location) / self.scale)
    }
}

pub fn max_approx_simplex(spec: &NetworkSpec) -> Result<SimplexApprox> {
    let levels = spec.levels()?;
    let m = spec.m as f64;
    let spread = m - levels[0].kappa - model::non_bottleneck_mean(&levels);
    let ratio = 1.0 - spread / m;
    if ratio > 1.0 - DEFAULT_BAND {
        return Err(Error::NearCritical { ratio, band: DEFAULT_BAND });
    }
    let n = levels[0].count;
    let nf = n as f64;
    let h1 = harmonic(n, 1);
    let h2 = harmonic(n, 2);
    Ok(SimplexApprox {
        n,
        spread,
        mean: spread * h1 / nf,
        variance: spread * spread * (nf * h2 - h1 * h1) / (nf * nf * (nf + 1.0)),
        scale: spread / nf,
        location: spread * nf.ln() / nf,
    })
}

/// ℓ(x) = sup_{θ ≥ 0} {−θx − Λ(θ)}.
pub fn rate_function(mgf: &LogMgf, x: f64) -> Result<LegendreFenchel> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("rate function needs x ≥ 0, got {x}")));
    }
    mgf.check()?;
    Ok(legendre_fenchel(|t| mgf.value(t), x, DEFAULT_THETA_CAP))
}

/// One row of the slow-convergence table: n² var(max X) against its Gumbel limit π²/6.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GumbelRow {
    pub n: u64,
    /// (nH₂(n) − H₁²(n))/(n + 1)
    pub scaled_variance: f64,
    /// scaled_variance / (π²/6)
    pub variance_ratio: f64,
    /// (π²/6 − scaled_variance)/scaled_variance
    pub relative_error: f64,
}

pub fn gumbel_row(n: u64) -> GumbelRow {
    let limit = PI * PI / 6.0;
    let (h1, h2) = (harmonic(n, 1), harmonic(n, 2));
    let nf = n as f64;
    let v = (nf * h2 - h1 * h1) / (nf + 1.0);
    GumbelRow { n, scaled_variance: v, variance_ratio: v / limit, relative_error: (limit - v) / v }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConcentrationCase {
    /// κ̄ > 1, m ≫ n: (m − M)/n → 1/(κ̄ − 1)
    Bulk,
    /// n̄ > 0: (m − M)/n → positive root of ζ²n̄ + ζ(n̄ + κ̄ − 1) − 1
    Proportional,
    /// κ̄ < 1, m ≫ n: M/m → κ̄
    Pool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationProfile {
    pub case: ConcentrationCase,
    pub zeta: f64,
    /// Finite-instance root ζₙ of ζ²(n/m) + ζ(n/m + κ/m − 1) − 1.
    pub zeta_n: f64,
    /// Minimizer nζₙ of g_{m,n}.
    pub minimizer: f64,
    /// g′_{m,n}(nζₙ)
    pub minimizer_check: f64,
    pub g_curve: Vec<(f64, f64)>,
    /// (i, ln h_{m,n}(i)) at integer points
    pub h_curve: Vec<(f64, f64)>,
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// g_{m,n}(x) = −(n+x)ln(n+x) + n ln n − m ln m + x ln x + (m−x)ln(m−x) + x ln κ + x.
pub fn g_mn(m: f64, n: f64, kappa: f64, x: f64) -> f64 {
    -xlnx(n + x) + xlnx(n) - xlnx(m) + xlnx(x) + xlnx(m - x) + x * kappa.ln() + x
}

pub fn g_mn_prime(m: f64, n: f64, kappa: f64, x: f64) -> f64 {
    -(n + x).ln() + x.ln() - (m - x).ln() + kappa.ln()
}

pub fn g_mn_second(m: f64, n: f64, x: f64) -> f64 {
    (x * x + m * n) / ((m - x) * x * (n + x))
}

fn ln_stirling(x: f64) -> f64 {
    0.5 * (2.0 * PI * x).ln() + x * x.ln() - x
}

/// ln h_{m,n}(i): the ratio of factorials to their Stirling approximations, for 0 < i < m.
pub fn ln_h_mn(m: u64, n: u64, i: u64) -> f64 {
    let (mf, nf, fi) = (m as f64, n as f64, i as f64);
    let ln_fact = |x: f64| ln_gamma(x + 1.0);
    ln_fact(nf + fi) - ln_stirling(nf + fi) + ln_fact(mf) - ln_stirling(mf) + ln_stirling(fi)
        - ln_fact(fi)
        + ln_stirling(mf - fi)
        - ln_fact(mf - fi)
        + 0.5 * (mf / ((mf - fi) * fi * (nf + fi))).ln()
}

/// Limit of g_{m,n}(nx)/n in the κ̄ > 1, m ≫ n case.
pub fn g_limit_bulk(kappa_bar: f64, x: f64) -> f64 {
    -(x).ln_1p() - x * (1.0 / x).ln_1p() + x * kappa_bar.ln()
}

/// Lemma-2 diagnostics at a finite instance.
pub fn concentration_profile(m: u64, n: u64, kappa: f64, band: f64) -> Result<ConcentrationProfile> {
    if m == 0 || n == 0 || !(kappa > 0.0) {
        return Err(Error::Domain(format!("need m, n ≥ 1 and kappa > 0 (m={m}, n={n}, kappa={kappa})")));
    }
    let (mf, nf) = (m as f64, n as f64);
    let kb = kappa / mf;
    let nb = if mf >= SCALE_SEPARATION * nf { 0.0 } else { nf / mf };
    let (case, zeta) = if nb > 0.0 {
        (ConcentrationCase::Proportional, solve_quadratic_positive(nb, nb + kb - 1.0, -1.0, 0.0)?.selected)
    } else if kb > 1.0 + band {
        (ConcentrationCase::Bulk, 1.0 / (kb - 1.0))
    } else if kb < 1.0 - band {
        (ConcentrationCase::Pool, kb)
    } else {
        return Err(Error::NearCritical { ratio: kb, band });
    };
    let zeta_n = solve_quadratic_positive(nf / mf, nf / mf + kb - 1.0, -1.0, 0.0)?.selected;
    let minimizer = nf * zeta_n;
    let minimizer_check = g_mn_prime(mf, nf, kappa, minimizer);
    let points = 200usize;
    let g_curve = (0..=points)
        .map(|i| {
            let x = mf * i as f64 / points as f64;
            (x, g_mn(mf, nf, kappa, x))
        })
        .collect();
    let step = (m / points as u64).max(1);
    let h_curve = (1..m).step_by(step as usize).map(|i| (i as f64, ln_h_mn(m, n, i))).collect();
    Ok(ConcentrationProfile { case, zeta, zeta_n, minimizer, minimizer_check, g_curve, h_curve })
}

/// ln[(e^n n^{−n}/P[M=m]) 𝙵ₙ(i) P[M=m−i]] with M ~ Poisson(κ): the scaled summand
/// whose Stirling split is h·e^{−g}.
pub fn ln_scaled_summand(m: u64, n: u64, kappa: f64, i: u64) -> f64 {
    let (nf, fi) = (n as f64, i as f64);
    let ln_pois = |j: u64| -kappa + j as f64 * kappa.ln() - ln_gamma(j as f64 + 1.0);
    nf - nf * nf.ln() - ln_pois(m) + ln_gamma_diff(fi + 1.0, nf - 1.0) + ln_pois(m - i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_examples() {
        assert_eq!(eta_homogeneous(2.0, 0.0).unwrap(), 2.0);
        assert!((eta_homogeneous(0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((eta_homogeneous(1.0, 1.0).unwrap() - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!(matches!(eta_homogeneous(0.9, 0.0), Err(Error::NearCritical { .. })));
    }

    #[test]
    fn eta_nonhomogeneous_examples() {
        assert!((eta_nonhomogeneous(&LogMgf::poisson(3.0), 0.0).unwrap() - 3.0).abs() < 1e-12);
        let g = eta_nonhomogeneous(&LogMgf::poisson(1.0), 1.0).unwrap();
        assert!((g - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        // 2/η + 0.5/(η − 0.5) = 1  ⇔  η² − 3η + 1 = 0 after clearing denominators
        let mgf = LogMgf::new(2.0, vec![(1.0, 0.5)]);
        let eta = eta_nonhomogeneous(&mgf, 0.0).unwrap();
        assert!((2.0 / eta + 0.5 / (eta - 0.5) - 1.0).abs() < 1e-12);
        let mut scan = (1.0001f64, f64::INFINITY);
        let mut x = 1.0001f64;
        while x < 10.0 {
            let r = (2.0 / x + 0.5 / (x - 0.5) - 1.0).abs();
            if r < scan.1 {
                scan = (x, r);
            }
            x += 1e-5;
        }
        assert!((scan.0 - eta).abs() < 2e-5);
        assert!(matches!(eta_nonhomogeneous(&LogMgf::poisson(0.8), 0.0), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn log_mgf_basics() {
        let mgf = LogMgf::new(1.3, vec![(0.2, 0.5), (0.1, 0.25)]);
        assert_eq!(mgf.value(0.0), 0.0);
        assert!((mgf.derivative(0.0) + mgf.mean()).abs() < 1e-14);
        for i in 1..100 {
            let t = 0.1 * i as f64;
            let h = 1e-5;
            let fd = (mgf.value(t + h) - mgf.value(t - h)) / (2.0 * h);
            assert!((fd - mgf.derivative(t)).abs() < 1e-6);
            assert!((mgf.derivative_at_ln(t.exp()) - mgf.derivative(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn geometric_location_examples() {
        let spec = NetworkSpec::homogeneous(10_000, 1024, 20_000.0);
        assert!((max_scaling_geometric(&spec, 2.0).unwrap().location - 10.0).abs() < 1e-12);
        let spec = NetworkSpec::grouped(10_000, &[(64, 1.0), (64, 2.0)]);
        let loc = max_scaling_geometric(&spec, 2.0).unwrap();
        assert_eq!(loc.level, 0);
        assert!((loc.location - 64f64.ln() / 2f64.ln()).abs() < 1e-12);
        let single = NetworkSpec::grouped(10_000, &[(1, 1.0), (1, 2.0)]);
        assert!(matches!(max_scaling_geometric(&single, 2.0), Err(Error::DegenerateGroup(_))));
    }

    #[test]
    fn simplex_approx_examples() {
        let a = max_approx_simplex(&NetworkSpec::homogeneous(10_000, 1, 0.0)).unwrap();
        assert_eq!((a.mean, a.variance), (10_000.0, 0.0));
        let a = max_approx_simplex(&NetworkSpec::homogeneous(1500, 2, 500.0)).unwrap();
        assert!((a.mean - 750.0).abs() < 1e-9);
        assert!((a.variance - 1e6 / 48.0).abs() < 1e-6);
        assert!((a.gumbel_cdf(a.gumbel_quantile(0.3)) - 0.3).abs() < 1e-12);
        assert!(matches!(
            max_approx_simplex(&NetworkSpec::homogeneous(1000, 2, 990.0)),
            Err(Error::NearCritical { .. })
        ));
    }

    #[test]
    fn remark_two_numbers() {
        assert!((gumbel_row(100).relative_error - 0.216).abs() < 1e-3);
        assert!((gumbel_row(1000).relative_error - 0.037).abs() < 1e-3);
    }

    #[test]
    fn rate_function_examples() {
        let p = LogMgf::poisson(2.0);
        assert!((rate_function(&p, 1.0).unwrap().value - (1.0 - 2f64.ln())).abs() < 1e-12);
        let mgf = LogMgf::new(1.0, vec![(0.5, 0.5)]);
        assert!(rate_function(&mgf, mgf.mean()).unwrap().value.abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let v = rate_function(&mgf, mgf.mean() * i as f64 / 20.0).unwrap().value;
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        assert!(rate_function(&mgf, -1.0).is_err());
    }

    #[test]
    fn concentration_examples() {
        let p = concentration_profile(10_000_000, 1000, 2e7, DEFAULT_BAND).unwrap();
        assert_eq!(p.case, ConcentrationCase::Bulk);
        assert_eq!(p.zeta, 1.0);
        assert!((p.zeta_n - 1.0).abs() < 1e-3);
        assert!(p.minimizer_check.abs() < 1e-6);
        assert!((g_limit_bulk(2.0, 1.0) + 2f64.ln()).abs() < 1e-15);
        // n̄ = 1, κ̄ → 0: root of ζ² − 1
        let p = concentration_profile(1000, 1000, 1e-9, DEFAULT_BAND).unwrap();
        assert_eq!(p.case, ConcentrationCase::Proportional);
        assert!((p.zeta - 1.0).abs() < 1e-9);
        assert!(matches!(concentration_profile(10_000, 10, 10_000.0, DEFAULT_BAND), Err(Error::NearCritical { .. })));
    }

    #[test]
    fn stirling_split_identity() {
        let (m, n, kappa) = (400u64, 20u64, 700.0);
        for i in [1u64, 5, 20, 100, 399] {
            let lhs = ln_scaled_summand(m, n, kappa, i);
            let rhs = ln_h_mn(m, n, i) - g_mn(m as f64, n as f64, kappa, i as f64);
            assert!((lhs - rhs).abs() < 1e-9, "i={i}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn g_is_convex() {
        let (m, n, kappa) = (500.0, 30.0, 900.0);
        for i in 1..499 {
            let x = i as f64;
            let d2 = g_mn(m, n, kappa, x + 1.0) - 2.0 * g_mn(m, n, kappa, x) + g_mn(m, n, kappa, x - 1.0);
            assert!(d2 > 0.0);
            assert!(g_mn_second(m, n, x) > 0.0);
        }
    }
}

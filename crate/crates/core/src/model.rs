//! Network instances, validation and regime classification.

use crate::asymptotics::{self, LogMgf};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub count: u64,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Queues {
    Homogeneous { n: u64, kappa: f64 },
    Groups(Vec<Group>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub lambda: f64,
    pub p: Vec<f64>,
    pub mu: Vec<f64>,
}

/// A closed network: `m` customers, one infinite-server hub, single-server queues.
///
/// Queues are either given by utilization parameters κᵢ, by rates (κᵢ⁻¹ = pᵢλ/μᵢ, so larger
/// κ means a lighter queue), or both.
/// κ = 0 is accepted as the degenerate limit in which the hub is always empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub m: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queues: Option<Queues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Rates>,
}

/// One utilization level of a normalized spec.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub count: u64,
    pub kappa: f64,
}

const MERGE_TOL: f64 = 1e-12;

fn same_kappa(a: f64, b: f64) -> bool {
    (a - b).abs() <= MERGE_TOL * a.abs().max(b.abs())
}

impl NetworkSpec {
    pub fn homogeneous(m: u64, n: u64, kappa: f64) -> NetworkSpec {
        NetworkSpec { m, queues: Some(Queues::Homogeneous { n, kappa }), rates: None }
    }

    pub fn grouped(m: u64, groups: &[(u64, f64)]) -> NetworkSpec {
        let groups = groups.iter().map(|&(count, kappa)| Group { count, kappa }).collect();
        NetworkSpec { m, queues: Some(Queues::Groups(groups)), rates: None }
    }

    pub fn from_rates(m: u64, lambda: f64, p: Vec<f64>, mu: Vec<f64>) -> NetworkSpec {
        NetworkSpec { m, queues: None, rates: Some(Rates { lambda, p, mu }) }
    }

    pub fn from_json(text: &str) -> Result<NetworkSpec> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    /// Collapse rates to κ, merge equal-κ queues and sort levels by ascending κ.
    pub fn validate(&self) -> Result<NetworkSpec> {
        let (levels, rates) = self.checked_levels()?;
        let queues = if levels.len() == 1 {
            Queues::Homogeneous { n: levels[0].count, kappa: levels[0].kappa }
        } else {
            Queues::Groups(levels.iter().map(|l| Group { count: l.count, kappa: l.kappa }).collect())
        };
        Ok(NetworkSpec { m: self.m, queues: Some(queues), rates })
    }

    /// Normalized levels, bottleneck (smallest κ) first.
    pub fn levels(&self) -> Result<Vec<Level>> {
        Ok(self.checked_levels()?.0)
    }

    pub fn n(&self) -> Result<u64> {
        Ok(self.levels()?.iter().map(|l| l.count).sum())
    }

    pub fn is_homogeneous(&self) -> Result<bool> {
        Ok(self.levels()?.len() == 1)
    }

    /// κᵢ for each queue in canonical order (levels expanded).
    pub fn kappas(&self) -> Result<Vec<f64>> {
        Ok(expand(&self.levels()?))
    }

    fn checked_levels(&self) -> Result<(Vec<Level>, Option<Rates>)> {
        if self.m == 0 {
            return Err(Error::InvalidSpec("m: must be a positive integer".into()));
        }
        let explicit = match &self.queues {
            None => None,
            Some(Queues::Homogeneous { n, kappa }) => {
                if *n == 0 {
                    return Err(Error::InvalidSpec("queues.homogeneous.n: must be positive".into()));
                }
                check_kappa("queues.homogeneous.kappa", *kappa)?;
                Some(vec![Level { count: *n, kappa: *kappa }])
            }
            Some(Queues::Groups(groups)) => {
                if groups.is_empty() {
                    return Err(Error::InvalidSpec("queues.groups: empty".into()));
                }
                let mut out = Vec::with_capacity(groups.len());
                for (i, g) in groups.iter().enumerate() {
                    if g.count == 0 {
                        return Err(Error::InvalidSpec(format!("queues.groups[{i}].count: must be positive")));
                    }
                    check_kappa(&format!("queues.groups[{i}].kappa"), g.kappa)?;
                    out.push(Level { count: g.count, kappa: g.kappa });
                }
                Some(out)
            }
        };
        let derived = match &self.rates {
            None => None,
            Some(r) => Some(rate_kappas(r)?),
        };
        let (kappas, rates) = match (explicit, derived) {
            (None, None) => return Err(Error::InvalidSpec("queues: either queues or rates is required".into())),
            (Some(levels), None) => (expand(&levels), None),
            (explicit, Some(kappas)) => {
                if let Some(levels) = explicit {
                    let given = expand(&levels);
                    if given.len() != kappas.len() {
                        return Err(Error::InvalidSpec(format!(
                            "rates: {} queues in rates, {} in queues",
                            kappas.len(),
                            given.len()
                        )));
                    }
                    for (i, (a, b)) in given.iter().zip(&kappas).enumerate() {
                        if (a - b).abs() > MERGE_TOL * a.abs().max(b.abs()) {
                            return Err(Error::InvalidSpec(format!(
                                "rates: queue {} has kappa {b} from rates but {a} in queues",
                                i + 1
                            )));
                        }
                    }
                }
                let r = self.rates.clone().expect("rates present");
                (kappas, Some(r))
            }
        };
        let mut order: Vec<usize> = (0..kappas.len()).collect();
        order.sort_by(|&a, &b| kappas[a].total_cmp(&kappas[b]));
        let mut levels: Vec<Level> = Vec::new();
        for &i in &order {
            match levels.last_mut() {
                Some(l) if same_kappa(l.kappa, kappas[i]) => l.count += 1,
                _ => levels.push(Level { count: 1, kappa: kappas[i] }),
            }
        }
        let rates = rates.map(|r| Rates {
            lambda: r.lambda,
            p: order.iter().map(|&i| r.p[i]).collect(),
            mu: order.iter().map(|&i| r.mu[i]).collect(),
        });
        Ok((levels, rates))
    }
}

fn check_kappa(field: &str, kappa: f64) -> Result<()> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::InvalidSpec(format!("{field}: must be finite and nonnegative, got {kappa}")));
    }
    Ok(())
}

fn rate_kappas(r: &Rates) -> Result<Vec<f64>> {
    if !(r.lambda > 0.0) || !r.lambda.is_finite() {
        return Err(Error::InvalidSpec(format!("rates.lambda: must be positive, got {}", r.lambda)));
    }
    if r.p.is_empty() {
        return Err(Error::InvalidSpec("rates.p: empty".into()));
    }
    if r.p.len() != r.mu.len() {
        return Err(Error::InvalidSpec(format!("rates: p has {} entries, mu has {}", r.p.len(), r.mu.len())));
    }
    for (i, &p) in r.p.iter().enumerate() {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidSpec(format!("rates.p[{i}]: must be positive, got {p}")));
        }
    }
    for (i, &mu) in r.mu.iter().enumerate() {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidSpec(format!("rates.mu[{i}]: must be positive, got {mu}")));
        }
    }
    let total: f64 = r.p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!("rates.p: probability mass is {total}, expected 1")));
    }
    Ok(r.p.iter().zip(&r.mu).map(|(p, mu)| mu / (p * r.lambda)).collect())
}

fn expand(levels: &[Level]) -> Vec<f64> {
    levels.iter().flat_map(|l| std::iter::repeat(l.kappa).take(l.count as usize)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    GeometricBulk,
    GeometricProportional,
    SimplexLimit,
    NearCritical,
    Unclassified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioSource {
    Supplied,
    Derived,
}

/// Limit ratios: `total` is κ̄ (or κ̄₁ + l̄), `count` is n̄ (or n̄₁).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub total: f64,
    pub count: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Limits {
    pub total: f64,
    pub count: f64,
    pub source: RatioSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GumbelConstants {
    pub scale: f64,
    pub location: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Concentration point: of (m − M)/n in the geometric regimes, of M/m in the simplex regime.
    pub zeta: Option<f64>,
    pub eta: Option<f64>,
    pub predicted_max_location: Option<f64>,
    pub gumbel: Option<GumbelConstants>,
    pub warnings: Vec<String>,
    pub limits: Limits,
}

pub const DEFAULT_BAND: f64 = 0.05;
/// "n ≫ 1" and "m ≫ n" thresholds.
pub const SCALE_SEPARATION: f64 = 30.0;

/// Mean number of customers in the non-bottleneck levels: Σ nⱼ ϱⱼ/(1 − ϱⱼ).
pub(crate) fn non_bottleneck_mean(levels: &[Level]) -> f64 {
    let k1 = levels[0].kappa;
    levels[1..]
        .iter()
        .map(|l| {
            let rho = k1 / l.kappa;
            l.count as f64 * rho / (1.0 - rho)
        })
        .sum()
}

/// Ratios read off a finite instance. n̄ is reported as 0 once m ≥ 30·n₁ (the "m ≫ n" side).
pub fn derived_ratios(spec: &NetworkSpec) -> Result<Ratios> {
    let levels = spec.levels()?;
    let m = spec.m as f64;
    let total = (levels[0].kappa + non_bottleneck_mean(&levels)) / m;
    let n1 = levels[0].count as f64;
    let count = if m >= SCALE_SEPARATION * n1 { 0.0 } else { n1 / m };
    Ok(Ratios { total, count })
}

/// The limit law of M + |L| implied by a grouped instance, rescaled so that its mean
/// matches `total` when ratios are supplied.
pub(crate) fn instance_mgf(levels: &[Level], m: u64, total: f64) -> LogMgf {
    let m = m as f64;
    let k1 = levels[0].kappa;
    let rest: Vec<(f64, f64)> =
        levels[1..].iter().map(|l| (l.count as f64 / m, k1 / l.kappa)).collect();
    let lbar: f64 = rest.iter().map(|(f, r)| f * r / (1.0 - r)).sum();
    LogMgf::new((total - lbar).max(0.0), rest)
}

/// Place an instance in the paper's regime dichotomy and solve its constants.
pub fn classify(spec: &NetworkSpec, ratios: Option<Ratios>, band: f64) -> Result<RegimeReport> {
    let levels = spec.levels()?;
    let (r, source) = match ratios {
        Some(r) => (r, RatioSource::Supplied),
        None => (derived_ratios(spec)?, RatioSource::Derived),
    };
    let limits = Limits { total: r.total, count: r.count, source };
    let mut report = RegimeReport {
        regime: Regime::Unclassified,
        zeta: None,
        eta: None,
        predicted_max_location: None,
        gumbel: None,
        warnings: Vec::new(),
        limits,
    };
    if !(r.total.is_finite() && r.count.is_finite() && r.total >= 0.0 && r.count >= 0.0) {
        report.warnings.push(format!("ratios must be finite and nonnegative: {:?}", r));
        return Ok(report);
    }
    if !(band > 0.0 && band < 0.5) {
        return Err(Error::Domain(format!("band must lie in (0, 0.5), got {band}")));
    }
    let n1 = levels[0].count;
    let m = spec.m as f64;
    let ratio_name = if levels.len() == 1 { "kappa/m" } else { "(kappa_1 + l)/m" };

    if r.count > 0.0 {
        report.regime = Regime::GeometricProportional;
    } else if (r.total - 1.0).abs() <= band {
        report.regime = Regime::NearCritical;
        report.warnings.push(format!(
            "{ratio_name} = {:.6} lies within {band} of 1: no theorem covers this boundary",
            r.total
        ));
        return Ok(report);
    } else if r.total > 1.0 {
        report.regime = Regime::GeometricBulk;
    } else {
        report.regime = Regime::SimplexLimit;
    }

    match report.regime {
        Regime::GeometricBulk | Regime::GeometricProportional => {
            if (n1 as f64) < SCALE_SEPARATION {
                report.warnings.push(format!("n >> 1 not met: bottleneck count {n1} < {SCALE_SEPARATION}"));
            }
            if report.regime == Regime::GeometricBulk && m < SCALE_SEPARATION * n1 as f64 {
                report.warnings.push(format!("m >> n not met: m = {} < {SCALE_SEPARATION} * {n1}", spec.m));
            }
            let nn = n1 as f64;
            if nn > 1.0 && (1.0 + nn / m).ln() > 0.25 * nn.ln() {
                report.warnings.push(format!(
                    "ln n >> ln(1 + n/m) not met: {:.3} vs {:.3}",
                    nn.ln(),
                    (1.0 + nn / m).ln()
                ));
            }
            let eta = if levels.len() == 1 {
                asymptotics::eta_homogeneous(r.total, r.count)?
            } else {
                asymptotics::eta_nonhomogeneous(&instance_mgf(&levels, spec.m, r.total), r.count)?
            };
            report.eta = Some(eta);
            report.zeta = Some(1.0 / (eta - 1.0));
            match asymptotics::max_scaling_geometric(spec, eta) {
                Ok(loc) => {
                    report.predicted_max_location = Some(loc.location);
                    report.warnings.extend(loc.warnings);
                }
                Err(e) => report.warnings.push(e.to_string()),
            }
        }
        Regime::SimplexLimit => {
            if m < SCALE_SEPARATION * n1 as f64 {
                report.warnings.push(format!("m >> n not met: m = {} < {SCALE_SEPARATION} * {n1}", spec.m));
            }
            report.zeta = Some(r.total);
            match asymptotics::max_approx_simplex(spec) {
                Ok(approx) => {
                    report.predicted_max_location = Some(approx.mean);
                    report.gumbel = Some(GumbelConstants { scale: approx.scale, location: approx.location });
                }
                Err(e) => report.warnings.push(e.to_string()),
            }
        }
        _ => unreachable!(),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        let s = NetworkSpec::from_rates(10, 2.0, vec![0.5, 0.5], vec![1.0, 1.0]).validate().unwrap();
        assert_eq!(s.queues, Some(Queues::Homogeneous { n: 2, kappa: 1.0 }));
        let s = NetworkSpec::grouped(10, &[(2, 1.0), (3, 1.0)]).validate().unwrap();
        assert_eq!(s.queues, Some(Queues::Homogeneous { n: 5, kappa: 1.0 }));
        let bad = NetworkSpec::from_rates(10, 2.0, vec![0.6, 0.6], vec![1.0, 1.0]);
        assert!(matches!(bad.validate(), Err(Error::InvalidSpec(_))));
        assert!(matches!(NetworkSpec::homogeneous(0, 2, 1.0).validate(), Err(Error::InvalidSpec(_))));
        assert!(matches!(NetworkSpec::grouped(3, &[]).validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn levels_are_sorted_and_rates_follow() {
        let s = NetworkSpec::from_rates(4, 1.0, vec![0.25, 0.5, 0.25], vec![0.5, 0.25, 0.5]);
        let v = s.validate().unwrap();
        assert_eq!(v.queues, Some(Queues::Groups(vec![Group { count: 1, kappa: 0.5 }, Group { count: 2, kappa: 2.0 }])));
        assert_eq!(v.rates.unwrap().p, vec![0.5, 0.25, 0.25]);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"m": 5, "queues": {"groups": [{"count": 2, "kappa": 3.0}, {"count": 1, "kappa": 1.5}]}}"#;
        let s = NetworkSpec::from_json(text).unwrap();
        assert_eq!(s.levels().unwrap(), vec![Level { count: 1, kappa: 1.5 }, Level { count: 2, kappa: 3.0 }]);
        assert_eq!(NetworkSpec::from_json(&s.to_json()).unwrap(), s);
        let h = NetworkSpec::from_json(r#"{"m": 2, "queues": {"homogeneous": {"n": 2, "kappa": 1}}}"#).unwrap();
        assert_eq!(h, NetworkSpec::homogeneous(2, 2, 1.0));
    }

    #[test]
    fn classify_examples() {
        let r = classify(&NetworkSpec::homogeneous(100_000, 100, 200_000.0), None, DEFAULT_BAND).unwrap();
        assert_eq!(r.regime, Regime::GeometricBulk);
        assert_eq!(r.eta, Some(2.0));
        assert_eq!(r.zeta, Some(1.0));

        let spec = NetworkSpec::homogeneous(1000, 1000, 1000.0);
        let r = classify(&spec, Some(Ratios { total: 1.0, count: 1.0 }), DEFAULT_BAND).unwrap();
        assert_eq!(r.regime, Regime::GeometricProportional);
        assert!((r.eta.unwrap() - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);

        let r = classify(&NetworkSpec::homogeneous(1000, 4, 500.0), None, DEFAULT_BAND).unwrap();
        assert_eq!(r.regime, Regime::SimplexLimit);
        assert_eq!(r.eta, None);

        let r = classify(&NetworkSpec::homogeneous(1000, 4, 1020.0), None, DEFAULT_BAND).unwrap();
        assert_eq!(r.regime, Regime::NearCritical);
        assert_eq!(r.eta, None);
    }
}

use closednet::exact::{self, Oracle};
use closednet::simulate::{
    ctmc_occupancy, extreme_stats, sample_stationary, simulate_ctmc, total_variation, CtmcConfig,
};
use closednet::NetworkSpec;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::HashMap;

/// Pearson statistic of observed counts against expected masses, pooling cells below 5.
fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut obs, mut exp) = (0.0, 0.0);
    for (i, &p) in probs.iter().enumerate() {
        obs += *counts.get(i).unwrap_or(&0) as f64;
        exp += p * total as f64;
        if exp >= 5.0 {
            stat += (obs - exp) * (obs - exp) / exp;
            cells += 1;
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 {
        stat += (obs - exp) * (obs - exp) / exp.max(1e-300);
        cells += 1;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn stationary_sampler_matches_exact_max_and_marginal() {
    let spec = NetworkSpec::grouped(60, &[(4, 20.0), (6, 45.0)]);
    let batch = sample_stationary(&spec, 40_000, 11).unwrap();
    let max = exact::max_law(&spec).unwrap();
    let mut counts = vec![0u64; max.len()];
    for x in batch.maxima() {
        counts[x as usize] += 1;
    }
    let p = chi_square_p(&counts, max.masses());
    assert!(p > 1e-3, "max law p-value {p}");

    let q = 7;
    let marg = exact::marginal_law(&spec, q as u64).unwrap();
    let mut counts = vec![0u64; marg.len()];
    for i in 0..batch.rows() {
        counts[batch.row(i)[q] as usize] += 1;
    }
    let p = chi_square_p(&counts, marg.masses());
    assert!(p > 1e-3, "marginal p-value {p}");
}

#[test]
fn chain_built_from_raw_rates_matches_product_form() {
    // distinct routing and service rates: checks the κ = μ/(pλ) reading end to end
    let spec = NetworkSpec::from_rates(3, 1.5, vec![0.2, 0.5, 0.3], vec![0.9, 0.6, 2.0]).validate().unwrap();
    let exact: HashMap<Vec<u64>, f64> = Oracle::new(&spec).unwrap().probabilities().into_iter().collect();
    let occ = ctmc_occupancy(&spec, 4_000_000, 10_000, 2).unwrap();
    let tv = total_variation(&occ, &exact);
    assert!(tv < 0.01, "total variation {tv}");
}

#[test]
fn chain_max_mean_agrees_within_standard_errors() {
    let spec = NetworkSpec::homogeneous(12, 3, 6.0);
    let batch = simulate_ctmc(&spec, CtmcConfig::with_defaults(3, 20_000), 8).unwrap();
    let s = extreme_stats(&batch).unwrap();
    let want = exact::max_law(&spec).unwrap().mean();
    assert!((s.mean - want).abs() < 5.0 * s.std_error, "{} ± {} vs {want}", s.mean, s.std_error);
}

#[test]
fn batches_do_not_depend_on_thread_count() {
    let spec = NetworkSpec::grouped(50, &[(3, 12.0), (4, 40.0)]);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| sample_stationary(&spec, 10_000, 4).unwrap());
    let b = four.install(|| sample_stationary(&spec, 10_000, 4).unwrap());
    assert_eq!(a, b);
    let cfg = CtmcConfig { burn_in_events: 500, sample_interval_events: 20, replications: 700 };
    let a = one.install(|| simulate_ctmc(&spec, cfg, 4).unwrap());
    let b = four.install(|| simulate_ctmc(&spec, cfg, 4).unwrap());
    assert_eq!(a, b);
}

#[test]
fn extreme_summary_gumbel_grid_tracks_exact_law() {
    let spec = NetworkSpec::homogeneous(20_000, 50, 0.0);
    let s = extreme_stats(&sample_stationary(&spec, 20_000, 1).unwrap()).unwrap();
    assert_eq!(s.gumbel.len(), 29);
    let exact = exact::max_law(&spec).unwrap();
    let n = 50f64;
    for g in &s.gumbel {
        // x = n·max/m − ln n  ⇔  max = m(x + ln n)/n
        let want = exact.cdf(((g.x + n.ln()) * s.spread / n).floor() as i64);
        assert!((g.ecdf - want).abs() <= 4.0 * g.std_error.max(1e-3), "{g:?} vs {want}");
    }
}

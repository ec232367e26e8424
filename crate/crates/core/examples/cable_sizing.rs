//! Sizing buffers: 1000 identical queues fed from a pool of users. What buffer holds the
//! longest queue 99% of the time, and how does the answer change with the load?
use closednet::{classify, exact, NetworkSpec};

fn main() -> closednet::Result<()> {
    let (n, m) = (1_000u64, 50_000u64);
    println!("{:>10} {:>14} {:>8} {:>8} {:>10}", "kappa/m", "regime", "median", "p99", "predicted");
    // Near kappa/m = 1 the simplex prediction runs low: with n/m = 0.02 the queued total sits
    // near the proportional root (≈12.9k at 0.8), not at m − kappa = 10k.
    for ratio in [3.0, 2.0, 1.5, 0.8, 0.5, 0.2] {
        let spec = NetworkSpec::homogeneous(m, n, ratio * m as f64);
        let law = exact::max_law(&spec)?;
        let r = classify(&spec, None, 0.05)?;
        println!(
            "{ratio:>10} {:>14} {:>8} {:>8} {:>10.1}",
            format!("{:?}", r.regime),
            law.median(),
            law.quantile(0.99),
            r.predicted_max_location.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

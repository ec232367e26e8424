//! Where a network sits in the geometric/simplex dichotomy, and what that predicts for max L.
use closednet::{classify, exact, NetworkSpec};

fn main() -> closednet::Result<()> {
    let cases = [
        ("pool-limited, kappa/m = 2", NetworkSpec::homogeneous(100_000, 100, 200_000.0)),
        ("proportional, n/m = 1/2", NetworkSpec::homogeneous(2_000, 1_000, 1_000.0)),
        ("queue-limited, kappa/m = 1/2", NetworkSpec::homogeneous(20_000, 100, 10_000.0)),
        ("near critical", NetworkSpec::homogeneous(10_000, 100, 10_100.0)),
        ("two levels", NetworkSpec::grouped(50_000, &[(500, 90_000.0), (500, 180_000.0)])),
    ];
    for (name, spec) in cases {
        let r = classify(&spec, None, 0.05)?;
        let median = exact::max_law(&spec)?.median();
        println!("{name}: {:?}", r.regime);
        println!(
            "  eta {:?}  zeta {:?}  predicted {:?}  exact median {median}",
            r.eta, r.zeta, r.predicted_max_location.map(|x| (x * 100.0).round() / 100.0)
        );
        for w in &r.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}

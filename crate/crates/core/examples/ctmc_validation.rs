//! The network simulated from its raw rates, without using the product form.
use closednet::exact::Oracle;
use closednet::simulate::{ctmc_occupancy, total_variation};
use closednet::NetworkSpec;
use std::collections::HashMap;

fn main() -> closednet::Result<()> {
    // hub rate λ per customer, routing p, service rates μ
    let spec = NetworkSpec::from_rates(3, 1.0, vec![0.5, 0.3, 0.2], vec![1.0, 0.4, 0.9]).validate()?;
    println!("kappa = {:?}", spec.kappas()?);
    let exact: HashMap<Vec<u64>, f64> = Oracle::new(&spec)?.probabilities().into_iter().collect();
    for events in [100_000, 1_000_000, 10_000_000] {
        let occ = ctmc_occupancy(&spec, events, 10_000, 1)?;
        println!("{events:>9} events: total variation {:.5}", total_variation(&occ, &exact));
    }
    Ok(())
}

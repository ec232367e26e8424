//! Exact laws of a small grouped network, checked against brute-force enumeration.
use closednet::exact::{self, Oracle};
use closednet::NetworkSpec;

fn main() -> closednet::Result<()> {
    let spec = NetworkSpec::grouped(12, &[(2, 4.0), (3, 9.0)]).validate()?;
    let max = exact::max_law(&spec)?;
    let oracle = Oracle::new(&spec)?;
    println!("max L: mean {:.4}, median {}, var {:.4}", max.mean(), max.median(), max.variance());
    println!("{:>3} {:>12} {:>12}", "j", "P[max<=j]", "enumerated");
    let brute = oracle.max_law();
    for j in 0..=8 {
        println!("{j:>3} {:>12.9} {:>12.9}", max.cdf(j), brute.cdf(j));
    }
    let total = exact::total_population_law(&spec)?;
    println!("E|L| = {:.4}, E M = {:.4}", total.mean(), exact::hub_law(&spec)?.mean());
    for q in [0, 2] {
        println!("queue {} marginal mean {:.4}", q + 1, exact::marginal_law(&spec, q)?.mean());
    }
    println!("P[L <= (2,2,1,1,1)] = {:.6}", exact::joint_cdf(&spec, &[2, 2, 1, 1, 1])?);
    Ok(())
}

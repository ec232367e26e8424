//! max of a uniform point on the simplex: slow variance convergence, fast CDF convergence.
use closednet::asymptotics::gumbel_row;
use closednet::simplex::{gumbel_cdf, sample_continuous_max, ContinuousSimplex};
use closednet::simulate::kolmogorov_distance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    println!("{:>8} {:>10} {:>10}", "n", "n^2 var", "rel. err");
    for n in [10, 100, 1_000, 10_000, 100_000] {
        let r = gumbel_row(n);
        println!("{n:>8} {:>10.5} {:>9.2}%", r.scaled_variance, 100.0 * r.relative_error);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [10u64, 100, 1_000] {
        let mut xs: Vec<f64> = (0..20_000)
            .map(|_| n as f64 * sample_continuous_max(ContinuousSimplex { n }, &mut rng) - (n as f64).ln())
            .collect();
        xs.sort_by(f64::total_cmp);
        println!("n = {n:>5}: Kolmogorov distance to exp(-e^-x) {:.4}", kolmogorov_distance(&xs, gumbel_cdf));
    }
}

//! The discrete simplex: exact max CDF against stars-and-bars draws and the Gumbel shape.
use closednet::exact::bounded_compositions;
use closednet::simplex::{discrete_max_cdf, gumbel_cdf, sample_discrete, DiscreteSimplex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    println!("compositions of 10 into 4 parts of size <= 3: {}", bounded_compositions(10, 4, 3));
    let s = DiscreteSimplex::new(200, 100_000);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let draws: Vec<u64> = (0..5_000).map(|_| *sample_discrete(s, &mut rng).iter().max().unwrap()).collect();
    let (n, k) = (s.n as f64, s.k as f64);
    println!("{:>6} {:>9} {:>9} {:>9}", "j", "exact", "sampled", "gumbel");
    for x in [-1.0, 0.0, 1.0, 2.0, 3.0] {
        let j = (k * (x + n.ln()) / n).round() as u64;
        let hit = draws.iter().filter(|&&d| d <= j).count() as f64 / draws.len() as f64;
        println!("{j:>6} {:>9.5} {:>9.5} {:>9.5}", discrete_max_cdf(s, j), hit, gumbel_cdf(n * j as f64 / k - n.ln()));
    }
}

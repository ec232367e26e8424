//! Exact stationary draws, reproducible from a seed, compared with the exact max law.
use closednet::exact;
use closednet::simulate::{extreme_stats, sample_stationary};
use closednet::NetworkSpec;

fn main() -> closednet::Result<()> {
    let spec = NetworkSpec::grouped(2_000, &[(40, 1_000.0), (60, 3_000.0)]);
    let batch = sample_stationary(&spec, 50_000, 0xC10CED)?;
    let s = extreme_stats(&batch)?;
    let law = exact::max_law(&spec)?;
    println!("{} rows, streams {:?}", s.rows, batch.stream_ids);
    println!("mean max: sampled {:.3} ± {:.3}, exact {:.3}", s.mean, s.std_error, law.mean());
    for q in [0.1, 0.5, 0.9] {
        println!("  {q}-quantile: sampled {}, exact {}", s.pmf.quantile(q), law.quantile(q));
    }
    print!("{}", batch.to_csv().lines().take(3).collect::<Vec<_>>().join("\n"));
    println!("\n...");
    Ok(())
}

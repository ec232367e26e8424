//! Lower-tail rate function of the hub plus lighter queues, and the resulting tail ratio.
use closednet::asymptotics::{eta_nonhomogeneous, rate_function, LogMgf};

fn main() -> closednet::Result<()> {
    // bottleneck pool 1.5, plus a level of lighter queues: 0.4 per customer at ϱ = 1/2
    let mgf = LogMgf::new(1.5, vec![(0.4, 0.5)]);
    println!("mean {:.4}", mgf.mean());
    for i in 0..=8 {
        let x = mgf.mean() * i as f64 / 8.0;
        let lf = rate_function(&mgf, x)?;
        println!("l({x:.3}) = {:.5}  theta* {:.3}{}", lf.value, lf.theta, if lf.at_cap { " (not attained)" } else { "" });
    }
    for nbar in [0.0, 0.1, 0.5] {
        println!("eta at n1/m = {nbar}: {:.6}", eta_nonhomogeneous(&mgf, nbar)?);
    }
    Ok(())
}

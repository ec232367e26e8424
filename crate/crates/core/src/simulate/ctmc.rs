use super::{chunk_rng, Engine, SampleBatch};
use crate::error::{Error, Result};
use crate::model::NetworkSpec;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

/// Event-count sampling schedule for the Markov chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CtmcConfig {
    pub burn_in_events: u64,
    pub sample_interval_events: u64,
    pub replications: u64,
}

impl CtmcConfig {
    /// burn-in 10⁴(n+1) events, one row every 10(n+1) events.
    pub fn with_defaults(n: u64, replications: u64) -> CtmcConfig {
        CtmcConfig { burn_in_events: 10_000 * (n + 1), sample_interval_events: 10 * (n + 1), replications }
    }

    fn check(&self) -> Result<()> {
        if self.burn_in_events == 0 || self.sample_interval_events == 0 || self.replications == 0 {
            return Err(Error::InvalidSpec(format!("ctmc config entries must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Queues sharing (pᵢ, μᵢ).
#[derive(Clone, Debug)]
struct RateClass {
    start: usize,
    len: usize,
    p: f64,
    mu: f64,
}

/// The network dynamics, uniformized at rate mλ + Σμᵢ: each event is a hub completion
/// (rate Mλ, routed by p), a service completion of a busy queue (rate μᵢ), or a null event.
/// Recording the state at event epochs therefore samples the time-stationary law.
#[derive(Clone, Debug)]
pub struct CtmcChain {
    m: u64,
    lambda: f64,
    classes: Vec<RateClass>,
    /// cumulative routing probabilities per class
    route_cum: Vec<f64>,
    /// cumulative service-slot rates per class
    serve_cum: Vec<f64>,
    total_rate: f64,
    queues: Vec<u64>,
    hub: u64,
}

impl CtmcChain {
    pub fn new(spec: &NetworkSpec) -> Result<CtmcChain> {
        let spec = spec.validate()?;
        let n = spec.n()? as usize;
        let (lambda, p, mu) = match &spec.rates {
            Some(r) => (r.lambda, r.p.clone(), r.mu.clone()),
            None => {
                let kappas = spec.kappas()?;
                if kappas.iter().any(|&k| k <= 0.0) {
                    return Err(Error::InvalidSpec("ctmc needs positive kappa to synthesize rates".into()));
                }
                let nf = n as f64;
                (1.0, vec![1.0 / nf; n], kappas.iter().map(|k| k / nf).collect())
            }
        };
        let mut classes: Vec<RateClass> = Vec::new();
        for i in 0..n {
            match classes.last_mut() {
                Some(c) if c.p == p[i] && c.mu == mu[i] => c.len += 1,
                _ => classes.push(RateClass { start: i, len: 1, p: p[i], mu: mu[i] }),
            }
        }
        let mut route_cum = Vec::with_capacity(classes.len());
        let mut serve_cum = Vec::with_capacity(classes.len());
        let (mut r, mut s) = (0.0, 0.0);
        for c in &classes {
            r += c.p * c.len as f64;
            s += c.mu * c.len as f64;
            route_cum.push(r);
            serve_cum.push(s);
        }
        let m = spec.m;
        Ok(CtmcChain {
            m,
            lambda,
            classes,
            route_cum,
            serve_cum,
            total_rate: m as f64 * lambda + s,
            queues: vec![0; n],
            hub: m,
        })
    }

    pub fn state(&self) -> &[u64] {
        &self.queues
    }

    pub fn hub(&self) -> u64 {
        self.hub
    }

    fn pick(cum: &[f64], u: f64) -> usize {
        cum.partition_point(|&c| c <= u).min(cum.len() - 1)
    }

    /// Advance one uniformized event.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let u = rng.random::<f64>() * self.total_rate;
        let hub_rate = self.m as f64 * self.lambda;
        if u < hub_rate {
            // a hub slot fires; it is real only if that slot holds a customer
            if u < self.hub as f64 * self.lambda {
                let total = *self.route_cum.last().unwrap();
                let c = &self.classes[Self::pick(&self.route_cum, rng.random::<f64>() * total)];
                let i = c.start + rng.random_range(0..c.len);
                self.queues[i] += 1;
                self.hub -= 1;
            }
        } else {
            let v = u - hub_rate;
            let c = &self.classes[Self::pick(&self.serve_cum, v)];
            let i = c.start + rng.random_range(0..c.len);
            if self.queues[i] > 0 {
                self.queues[i] -= 1;
                self.hub += 1;
            }
        }
    }
}

const CHUNK: u64 = 256;

/// `config.replications` rows from independent chains (one per chunk of 256 rows).
pub fn simulate_ctmc(spec: &NetworkSpec, config: CtmcConfig, seed: u64) -> Result<SampleBatch> {
    config.check()?;
    let base = CtmcChain::new(spec)?;
    let n = base.queues.len();
    let chunks = config.replications.div_ceil(CHUNK);
    let parts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let rows = CHUNK.min(config.replications - c * CHUNK) as usize;
            let mut rng = chunk_rng(seed, c);
            let mut chain = base.clone();
            for _ in 0..config.burn_in_events {
                chain.step(&mut rng);
            }
            let mut buf = Vec::with_capacity(rows * n);
            for _ in 0..rows {
                for _ in 0..config.sample_interval_events {
                    chain.step(&mut rng);
                }
                buf.extend_from_slice(chain.state());
            }
            buf
        })
        .collect();
    Ok(SampleBatch {
        spec: spec.validate()?,
        n,
        samples: parts.concat(),
        seed,
        stream_ids: (0..chunks).collect(),
        engine: Engine::Ctmc,
    })
}

/// Fraction of event epochs spent in each state after burn-in (the time-average law).
pub fn ctmc_occupancy(spec: &NetworkSpec, events: u64, burn_in: u64, seed: u64) -> Result<HashMap<Vec<u64>, f64>> {
    let mut chain = CtmcChain::new(spec)?;
    let mut rng = chunk_rng(seed, 0);
    for _ in 0..burn_in {
        chain.step(&mut rng);
    }
    let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
    for _ in 0..events {
        chain.step(&mut rng);
        if let Some(c) = counts.get_mut(chain.state()) {
            *c += 1;
        } else {
            counts.insert(chain.state().to_vec(), 1);
        }
    }
    Ok(counts.into_iter().map(|(k, c)| (k, c as f64 / events as f64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_chain() {
        let occ = ctmc_occupancy(&NetworkSpec::homogeneous(1, 1, 1.0), 2_000_000, 1000, 5).unwrap();
        assert!((occ[&vec![1]] - 0.5).abs() < 0.01);
    }

    #[test]
    fn conserves_customers_and_is_deterministic() {
        let spec = NetworkSpec::grouped(7, &[(2, 1.0), (1, 3.0)]);
        let cfg = CtmcConfig { burn_in_events: 100, sample_interval_events: 7, replications: 600 };
        let a = simulate_ctmc(&spec, cfg, 1).unwrap();
        assert_eq!(a.rows(), 600);
        for i in 0..a.rows() {
            assert!(a.row(i).iter().sum::<u64>() <= 7);
        }
        assert_eq!(a, simulate_ctmc(&spec, cfg, 1).unwrap());
    }

    #[test]
    fn rejects_degenerate_kappa() {
        assert!(CtmcChain::new(&NetworkSpec::homogeneous(3, 2, 0.0)).is_err());
    }
}

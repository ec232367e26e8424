use crate::error::{Error, Result};
use crate::numerics::{lse, LogWeight, NeumaierSum};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// A probability mass function on the integers `offset..offset + masses.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    offset: i64,
    masses: Vec<f64>,
    log_masses: Vec<LogWeight>,
}

#[derive(Serialize, Deserialize)]
struct PmfJson {
    offset: i64,
    masses: Vec<f64>,
}

impl Serialize for Pmf {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PmfJson { offset: self.offset, masses: self.masses.clone() }.serialize(s)
    }
}

impl Pmf {
    /// Normalize unnormalized log weights.
    pub fn from_log_weights(offset: i64, ln_w: &[f64]) -> Pmf {
        let z = lse(ln_w);
        let log_masses: Vec<LogWeight> = ln_w.iter().map(|&x| LogWeight(x - z)).collect();
        let masses = log_masses.iter().map(|l| l.linear()).collect();
        Pmf { offset, masses, log_masses }
    }

    /// Wrap masses that already sum to one (up to rounding).
    pub fn from_masses(offset: i64, masses: Vec<f64>) -> Pmf {
        let log_masses = masses.iter().map(|&p| LogWeight::from_linear(p.max(0.0))).collect();
        Pmf { offset, masses, log_masses }
    }

    /// Empirical pmf of integer observations.
    pub fn from_counts(offset: i64, counts: &[u64]) -> Pmf {
        let total: u64 = counts.iter().sum();
        Pmf::from_masses(offset, counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn log_masses(&self) -> &[LogWeight] {
        &self.log_masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Largest value in the support.
    pub fn max_value(&self) -> i64 {
        self.offset + self.masses.len() as i64 - 1
    }

    pub fn pmf(&self, x: i64) -> f64 {
        let i = x - self.offset;
        if i < 0 || i >= self.masses.len() as i64 {
            0.0
        } else {
            self.masses[i as usize]
        }
    }

    /// P[X ≤ x]
    pub fn cdf(&self, x: i64) -> f64 {
        if x < self.offset {
            return 0.0;
        }
        let upto = ((x - self.offset) as usize).min(self.masses.len() - 1);
        let mut s = NeumaierSum::default();
        for &p in &self.masses[..=upto] {
            s.add(p);
        }
        s.value().min(1.0)
    }

    /// P[X ≥ x], summed from the far tail.
    pub fn tail(&self, x: i64) -> f64 {
        let from = (x - self.offset).max(0) as usize;
        let mut s = NeumaierSum::default();
        for &p in self.masses.iter().skip(from).rev() {
            s.add(p);
        }
        s.value().min(1.0)
    }

    pub fn cdf_vec(&self) -> Vec<f64> {
        let mut s = NeumaierSum::default();
        self.masses
            .iter()
            .map(|&p| {
                s.add(p);
                s.value().min(1.0)
            })
            .collect()
    }

    pub fn total(&self) -> f64 {
        let mut s = NeumaierSum::default();
        for &p in &self.masses {
            s.add(p);
        }
        s.value()
    }

    pub fn mean(&self) -> f64 {
        let mut s = NeumaierSum::default();
        for (i, &p) in self.masses.iter().enumerate() {
            s.add((self.offset + i as i64) as f64 * p);
        }
        s.value()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let mut s = NeumaierSum::default();
        for (i, &p) in self.masses.iter().enumerate() {
            let d = (self.offset + i as i64) as f64 - mu;
            s.add(d * d * p);
        }
        s.value()
    }

    /// Smallest x with P[X ≤ x] ≥ q.
    pub fn quantile(&self, q: f64) -> i64 {
        let mut s = NeumaierSum::default();
        for (i, &p) in self.masses.iter().enumerate() {
            s.add(p);
            if s.value() >= q {
                return self.offset + i as i64;
            }
        }
        self.max_value()
    }

    pub fn median(&self) -> i64 {
        self.quantile(0.5)
    }

    /// Check the invariants: nonnegative masses summing to 1 within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        if let Some(p) = self.masses.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::Domain(format!("negative or NaN mass {p}")));
        }
        let t = self.total();
        if (t - 1.0).abs() > tol {
            return Err(Error::Domain(format!("masses sum to {t}")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PmfJson { offset: self.offset, masses: self.masses.clone() }).expect("pmf serializes")
    }

    pub fn from_json(text: &str) -> Result<Pmf> {
        let p: PmfJson = serde_json::from_str(text).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(Pmf::from_masses(p.offset, p.masses))
    }

    /// CSV with header `value,pmf,cdf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,pmf,cdf\n");
        for (i, (&p, c)) in self.masses.iter().zip(self.cdf_vec()).enumerate() {
            writeln!(out, "{},{:e},{:e}", self.offset + i as i64, p, c).unwrap();
        }
        out
    }
}

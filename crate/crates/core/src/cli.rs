//! The `closednet` command line. `run` is the whole tool; the binary only forwards argv.

use crate::asymptotics::{gumbel_row, max_approx_simplex, max_scaling_geometric};
use crate::error::{Error, Result};
use crate::exact::{self, Oracle, Pmf};
use crate::model::{classify, NetworkSpec, Regime, RegimeReport, DEFAULT_BAND};
use crate::simulate::{extreme_stats, sample_stationary, simulate_ctmc, CtmcConfig, SampleBatch};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use std::fmt::Write as _;
use std::io::Write;

/// Default seed for `sample` and `simulate`.
pub const DEFAULT_SEED: u64 = 0xC10CED;

#[derive(Parser, Debug)]
#[command(
    name = "closednet",
    version,
    about = "Largest queue in a closed network with an infinite-server hub",
    after_help = "Sampling subcommands default to --seed 0xC10CED, so repeated runs are identical."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Law {
    Max,
    Marginal,
    Total,
}

#[derive(Args, Debug)]
struct SpecArgs {
    /// Network spec (JSON)
    #[arg(long)]
    spec: String,
    #[arg(long, value_enum, default_value = "json")]
    output: Output,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    common: SpecArgs,
    /// Rows to draw
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Random seed, decimal or 0x-hex
    #[arg(long, value_parser = parse_u64, default_value = "0xC10CED")]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the regime and solve its constants
    Regime {
        #[command(flatten)]
        common: SpecArgs,
        /// Half-width of the near-critical band around 1
        #[arg(long, default_value_t = DEFAULT_BAND)]
        band: f64,
    },
    /// Exact law of the maximum, one queue, or the total queued population
    Exact {
        #[command(flatten)]
        common: SpecArgs,
        #[arg(long, value_enum, default_value = "max")]
        law: Law,
        /// Queue for --law marginal, 1-based in ascending-kappa order
        #[arg(long, default_value_t = 1)]
        queue: u64,
    },
    /// Exact i.i.d. stationary samples (CSV rows, or JSON extreme statistics)
    Sample(SampleArgs),
    /// Markov-chain samples of the network dynamics (CSV rows, or JSON extreme statistics)
    Simulate(SampleArgs),
    /// Asymptotic constants; fails when no limit theorem covers the spec
    Asymptotic {
        #[command(flatten)]
        common: SpecArgs,
        #[arg(long, default_value_t = DEFAULT_BAND)]
        band: f64,
    },
    /// Cross-check the exact engine against brute-force enumeration on built-in specs
    Validate {
        #[arg(long, value_enum, default_value = "json")]
        output: Output,
    },
    /// Convergence of n² var(max) to the Gumbel variance π²/6
    GumbelTable {
        /// Comma-separated list of n
        #[arg(long, value_delimiter = ',', default_values_t = vec![10u64, 100, 1000, 10_000])]
        n: Vec<u64>,
        #[arg(long, value_enum, default_value = "json")]
        output: Output,
    },
}

fn parse_u64(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim();
    let r = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => t.parse(),
    };
    r.map_err(|e| format!("{s:?}: {e}"))
}

fn read_spec(path: &str) -> Result<NetworkSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidSpec(format!("{path}: {e}")))?;
    NetworkSpec::from_json(&text)?.validate()
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Flatten a JSON object into `field,value` rows.
fn kv_csv(v: &serde_json::Value) -> String {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut String) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, x) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, x, out);
                }
            }
            serde_json::Value::Array(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), x, out);
                }
            }
            serde_json::Value::String(s) => writeln!(out, "{prefix},\"{}\"", s.replace('"', "\"\"")).unwrap(),
            x => writeln!(out, "{prefix},{x}").unwrap(),
        }
    }
    let mut out = String::from("field,value\n");
    walk("", v, &mut out);
    out
}

fn emit_value(v: serde_json::Value, output: Output) -> String {
    match output {
        Output::Json => to_json(&v),
        Output::Csv => kv_csv(&v),
    }
}

fn law_json(name: &str, pmf: &Pmf) -> serde_json::Value {
    json!({
        "law": name,
        "offset": pmf.offset(),
        "masses": pmf.masses(),
        "cdf": pmf.cdf_vec(),
        "mean": pmf.mean(),
        "variance": pmf.variance(),
        "median": pmf.median(),
    })
}

fn batch_output(batch: &SampleBatch, output: Output) -> Result<String> {
    Ok(match output {
        Output::Csv => batch.to_csv(),
        Output::Json => {
            let stats = extreme_stats(batch)?;
            to_json(&json!({
                "engine": batch.engine,
                "seed": batch.seed,
                "stream_ids": batch.stream_ids,
                "n": batch.n,
                "stats": stats,
            }))
        }
    })
}

fn asymptotic(spec: &NetworkSpec, band: f64) -> Result<serde_json::Value> {
    let report: RegimeReport = classify(spec, None, band)?;
    match report.regime {
        Regime::NearCritical => {
            return Err(Error::NearCritical { ratio: report.limits.total, band });
        }
        Regime::Unclassified => return Err(Error::Domain(report.warnings.join("; "))),
        _ => {}
    }
    let mut v = json!({ "regime": report.regime, "limits": report.limits, "zeta": report.zeta, "eta": report.eta });
    if let Some(eta) = report.eta {
        v["geometric"] = serde_json::to_value(max_scaling_geometric(spec, eta)?).unwrap();
    }
    if report.regime == Regime::SimplexLimit {
        v["simplex"] = serde_json::to_value(max_approx_simplex(spec)?).unwrap();
    }
    v["warnings"] = json!(report.warnings);
    Ok(v)
}

/// One oracle-vs-engine comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub spec: String,
    pub quantity: String,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Largest pointwise gap between two laws over the union of their supports.
pub fn pmf_gap(a: &Pmf, b: &Pmf) -> f64 {
    let lo = a.offset().min(b.offset());
    let hi = a.max_value().max(b.max_value());
    (lo..=hi).map(|x| (a.pmf(x) - b.pmf(x)).abs()).fold(0.0, f64::max)
}

/// Small specs covering one queue, equal κ, grouped levels, heavy and light loads, κ = 0.
pub fn validation_suite() -> Vec<NetworkSpec> {
    vec![
        NetworkSpec::homogeneous(2, 2, 1.0),
        NetworkSpec::homogeneous(1, 1, 1.0),
        NetworkSpec::homogeneous(6, 3, 0.5),
        NetworkSpec::homogeneous(12, 4, 20.0),
        NetworkSpec::homogeneous(9, 2, 0.0),
        NetworkSpec::grouped(1, &[(1, 1.0), (1, 2.0)]),
        NetworkSpec::grouped(8, &[(2, 1.5), (2, 4.0)]),
        NetworkSpec::grouped(10, &[(1, 0.7), (2, 3.0), (1, 9.0)]),
    ]
}

/// Compare every exact law of each suite spec against enumeration.
pub fn validate_suite(specs: &[NetworkSpec], tol: f64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for spec in specs {
        let spec = spec.validate()?;
        let name = serde_json::to_string(&spec).unwrap();
        let oracle = Oracle::new(&spec)?;
        let mut push = |quantity: String, err: f64| {
            checks.push(Check { spec: name.clone(), quantity, max_abs_error: err, tolerance: tol, pass: err <= tol });
        };
        push("max_law".into(), pmf_gap(&exact::max_law(&spec)?, &oracle.max_law()));
        push("total_population_law".into(), pmf_gap(&exact::total_population_law(&spec)?, &oracle.total_population_law()));
        let n = oracle.n();
        for q in 0..n {
            push(format!("marginal_law[{}]", q + 1), pmf_gap(&exact::marginal_law(&spec, q as u64)?, &oracle.marginal_law(q)));
        }
        if n as u64 <= exact::JOINT_CDF_MAX_QUEUES {
            let bounds: Vec<Vec<u64>> = vec![vec![0; n], vec![1; n], (0..n as u64).map(|i| (i + 1) % 3).collect()];
            let err = bounds
                .iter()
                .map(|b| Ok((exact::joint_cdf(&spec, b)? - oracle.joint_cdf(b)).abs()))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            push("joint_cdf".into(), err);
        }
    }
    Ok(checks)
}

fn execute(cli: Cli) -> Result<(String, i32)> {
    let text = match cli.command {
        Command::Regime { common, band } => {
            let report = classify(&read_spec(&common.spec)?, None, band)?;
            emit_value(serde_json::to_value(report).unwrap(), common.output)
        }
        Command::Exact { common, law, queue } => {
            let spec = read_spec(&common.spec)?;
            let (name, pmf) = match law {
                Law::Max => ("max", exact::max_law(&spec)?),
                Law::Total => ("total", exact::total_population_law(&spec)?),
                Law::Marginal => {
                    if queue == 0 {
                        return Err(Error::Domain("--queue is 1-based".into()));
                    }
                    ("marginal", exact::marginal_law(&spec, queue - 1)?)
                }
            };
            match common.output {
                Output::Json => to_json(&law_json(name, &pmf)),
                Output::Csv => pmf.to_csv(),
            }
        }
        Command::Sample(a) => {
            let spec = read_spec(&a.common.spec)?;
            batch_output(&sample_stationary(&spec, a.samples as usize, a.seed)?, a.common.output)?
        }
        Command::Simulate(a) => {
            let spec = read_spec(&a.common.spec)?;
            let config = CtmcConfig::with_defaults(spec.n()?, a.samples);
            batch_output(&simulate_ctmc(&spec, config, a.seed)?, a.common.output)?
        }
        Command::Asymptotic { common, band } => {
            let v = asymptotic(&read_spec(&common.spec)?, band)?;
            emit_value(v, common.output)
        }
        Command::Validate { output } => {
            let checks = validate_suite(&validation_suite(), 1e-9)?;
            let ok = checks.iter().all(|c| c.pass);
            let text = match output {
                Output::Json => to_json(&json!({ "pass": ok, "checks": checks })),
                Output::Csv => {
                    let mut s = String::from("spec,quantity,max_abs_error,tolerance,pass\n");
                    for c in &checks {
                        writeln!(s, "\"{}\",{},{:e},{:e},{}", c.spec.replace('"', "\"\""), c.quantity, c.max_abs_error, c.tolerance, c.pass)
                            .unwrap();
                    }
                    s
                }
            };
            return Ok((text, if ok { 0 } else { 2 }));
        }
        Command::GumbelTable { n, output } => {
            if n.iter().any(|&x| x == 0) {
                return Err(Error::Domain("n must be positive".into()));
            }
            let rows: Vec<_> = n.iter().map(|&x| gumbel_row(x)).collect();
            match output {
                Output::Json => to_json(&rows),
                Output::Csv => {
                    let mut s = String::from("n,scaled_variance,variance_ratio,relative_error\n");
                    for r in &rows {
                        writeln!(s, "{},{:e},{:e},{:e}", r.n, r.scaled_variance, r.variance_ratio, r.relative_error).unwrap();
                    }
                    s
                }
            }
        }
    };
    Ok((text, 0))
}

/// Parse `args` (program name first), write the result to `out`, return the exit status.
/// Diagnostics go to stderr.
pub fn run<I, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = String>,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                eprint!("{e}");
            }
            return code;
        }
    };
    match execute(cli) {
        Ok((text, code)) => {
            if out.write_all(text.as_bytes()).is_err() {
                return 1;
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_parse_in_hex_and_decimal() {
        assert_eq!(parse_u64("0xC10CED").unwrap(), DEFAULT_SEED);
        assert_eq!(parse_u64("12").unwrap(), 12);
        assert!(parse_u64("0xC10CEDQ").is_err());
    }

    #[test]
    fn unknown_flags_are_rejected() {
        let mut out = Vec::new();
        assert_eq!(run(["closednet", "gumbel-table", "--bogus"].map(String::from), &mut out), 1);
    }
}

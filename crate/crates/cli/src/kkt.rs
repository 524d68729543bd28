//! `shfl verify-kkt`: closed-form cloud weights against the bisection
//! oracle.
//!
//! Instance files hold one `x1,...,xn;zeta;tau` per line; blank lines and
//! `#` comments are skipped.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shfl::cloud::{kkt_weights, objective, oracle_weights, CloudConfig, FLOOR_TOLERANCE, SUM_TOLERANCE};

use crate::{fmt_float, runtime, CliError};

/// Largest per-coordinate disagreement tolerated.
pub const WEIGHT_TOLERANCE: f64 = 1e-6;
/// Largest objective disagreement tolerated.
pub const OBJECTIVE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub x: Vec<f64>,
    pub cloud: CloudConfig,
}

pub fn parse_instance(line: &str) -> Result<Instance, String> {
    let parts: Vec<&str> = line.split(';').map(str::trim).collect();
    let [xs, zeta, tau] = parts[..] else {
        return Err(format!("expected `x1,...,xn;zeta;tau`, got {} fields", parts.len()));
    };
    let num = |s: &str, what: &str| -> Result<f64, String> {
        s.parse::<f64>()
            .map_err(|_| format!("{what}: cannot parse {s:?}"))
            .and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(format!("{what}: {v} is not finite"))
                }
            })
    };
    let x = xs
        .split(',')
        .enumerate()
        .map(|(i, s)| num(s.trim(), &format!("x{}", i + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Instance {
        x,
        cloud: CloudConfig {
            zeta: num(zeta, "zeta")?,
            tau: num(tau, "tau")?,
        },
    })
}

/// `n ∈ [2, 20]`, scores log-uniform on `[0.1, 10]`, a floor in
/// `[0.01, 1]` and a budget between `n·ζ` and `4·n·ζ`.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let n = rng.random_range(2..=20);
    let x = (0..n).map(|_| 10f64.powf(rng.random_range(-1.0..=1.0))).collect();
    let zeta = rng.random_range(0.01..=1.0);
    let tau = n as f64 * zeta * rng.random_range(1.0..=4.0);
    Instance {
        x,
        cloud: CloudConfig { zeta, tau },
    }
}

/// `count` instances from `seed`.
pub fn random_instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub closed_form: Vec<f64>,
    pub oracle: Vec<f64>,
    pub max_delta: f64,
    pub objective_delta: f64,
    pub iterative: bool,
    /// Floor and budget constraints hold for the closed form.
    pub feasible: bool,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.feasible && self.max_delta <= WEIGHT_TOLERANCE && self.objective_delta <= OBJECTIVE_TOLERANCE
    }
}

pub fn verify(inst: &Instance) -> shfl::Result<Verdict> {
    let sol = kkt_weights(&inst.x, &inst.cloud)?;
    let oracle = oracle_weights(&inst.x, &inst.cloud)?;
    let max_delta = sol
        .weights
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let objective_delta = (objective(&inst.x, &sol.weights) - objective(&inst.x, &oracle)).abs();
    let sum: f64 = sol.weights.iter().sum();
    let feasible = sol.weights.iter().all(|&w| w >= inst.cloud.zeta - FLOOR_TOLERANCE)
        && (sum - inst.cloud.tau).abs() <= SUM_TOLERANCE;
    Ok(Verdict {
        closed_form: sol.weights,
        oracle,
        max_delta,
        objective_delta,
        iterative: sol.iterative,
        feasible,
    })
}

pub enum Source<'a> {
    File(&'a Path),
    Random { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KktReport {
    pub checked: usize,
    pub failed: usize,
    pub malformed: usize,
}

const HEADER: [&str; 9] = [
    "instance",
    "n",
    "zeta",
    "tau",
    "closed_form",
    "oracle",
    "max_delta",
    "objective_delta",
    "iterative",
];

fn join(v: &[f64]) -> String {
    v.iter().map(|&w| fmt_float(w)).collect::<Vec<_>>().join(";")
}

/// Verifies every instance, writing one CSV row each to `out` and one
/// diagnostic per bad line to `diag`.
pub fn cmd_verify_kkt(source: Source<'_>, out: impl Write, mut diag: impl Write) -> Result<KktReport, CliError> {
    let instances: Vec<(usize, Result<Instance, String>)> = match source {
        Source::File(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            text.lines()
                .enumerate()
                .filter_map(|(i, l)| {
                    let l = l.split('#').next().unwrap_or("").trim();
                    (!l.is_empty()).then(|| (i + 1, parse_instance(l)))
                })
                .collect()
        }
        Source::Random { count, seed } => random_instances(count, seed)
            .into_iter()
            .enumerate()
            .map(|(i, inst)| (i + 1, Ok(inst)))
            .collect(),
    };

    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER).map_err(runtime)?;
    let mut report = KktReport::default();
    for (line, inst) in instances {
        let verdict = inst.and_then(|inst| verify(&inst).map(|v| (inst, v)).map_err(|e| e.to_string()));
        let (inst, v) = match verdict {
            Ok(ok) => ok,
            Err(msg) => {
                report.malformed += 1;
                writeln!(diag, "line {line}: {msg}").map_err(runtime)?;
                continue;
            }
        };
        report.checked += 1;
        if !v.passed() {
            report.failed += 1;
            writeln!(
                diag,
                "line {line}: closed form disagrees with oracle (max delta {:e}, objective delta {:e}, feasible {})",
                v.max_delta, v.objective_delta, v.feasible
            )
            .map_err(runtime)?;
        }
        w.write_record([
            line.to_string(),
            inst.x.len().to_string(),
            fmt_float(inst.cloud.zeta),
            fmt_float(inst.cloud.tau),
            join(&v.closed_form),
            join(&v.oracle),
            format!("{:e}", v.max_delta),
            format!("{:e}", v.objective_delta),
            v.iterative.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;

    if report.failed > 0 {
        return Err(CliError::Verification(format!(
            "{} of {} instances disagree with the oracle",
            report.failed, report.checked
        )));
    }
    if report.malformed > 0 {
        return Err(CliError::Validation(format!(
            "{} malformed or infeasible instance lines ({} verified)",
            report.malformed, report.checked
        )));
    }
    Ok(report)
}

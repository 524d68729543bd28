//! `shfl run`: one experiment to a per-round CSV and a JSON summary.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shfl::sim::{run_with_data, RoundRecord, SimConfig, SimOutcome};

use crate::config::{self, to_pairs};
use crate::{fmt_float, runtime, CliError};

pub const CSV_HEADER: [&str; 8] = [
    "round",
    "accuracy",
    "loss",
    "defense",
    "attack",
    "n_attackers",
    "attackers_selected",
    "edge_weights",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_accuracy: f64,
    pub final_accuracy: f64,
    pub seed: u64,
    pub rounds: usize,
    pub attackers: Vec<usize>,
    pub config: BTreeMap<String, String>,
}

impl Summary {
    pub fn new(cfg: &SimConfig, outcome: &SimOutcome) -> Self {
        let acc = outcome.records.iter().map(|r| r.accuracy);
        Self {
            max_accuracy: acc.clone().fold(f64::NAN, f64::max),
            final_accuracy: outcome.records.last().map_or(f64::NAN, |r| r.accuracy),
            seed: cfg.master_seed,
            rounds: outcome.records.len(),
            attackers: outcome.attackers.iter().copied().collect(),
            config: to_pairs(cfg).into_iter().collect(),
        }
    }

    /// The config echoed in the summary, parsed back.
    pub fn config(&self) -> Result<SimConfig, config::ConfigError> {
        let pairs: Vec<(&String, &String)> = self.config.iter().collect();
        config::from_pairs(&pairs)
    }
}

/// Per-round rows in the output schema.
pub fn write_csv<W: Write>(out: W, cfg: &SimConfig, outcome: &SimOutcome) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let pairs: BTreeMap<String, String> = to_pairs(cfg).into_iter().collect();
    let n_attackers = cfg.attacker_count().to_string();
    for r in &outcome.records {
        w.write_record([
            r.round.to_string(),
            fmt_float(r.accuracy),
            fmt_float(r.loss),
            pairs["defense"].clone(),
            pairs["attack.kind"].clone(),
            n_attackers.clone(),
            r.attackers_selected.to_string(),
            edge_weights(r),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn edge_weights(r: &RoundRecord) -> String {
    r.edges
        .iter()
        .map(|e| fmt_float(e.weight))
        .collect::<Vec<_>>()
        .join(";")
}

/// `results.csv` → `results.json`.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Loads data, runs `cfg` and writes the CSV and summary. Progress goes to
/// stderr unless `quiet`.
pub fn run_config(cfg: &SimConfig, csv_path: &Path, json_path: &Path, quiet: bool) -> Result<Summary, CliError> {
    let (train, test) = cfg.data.load(cfg.master_seed).map_err(runtime)?;
    let outcome = run_with_data(cfg, &train, &test, |r| {
        if !quiet {
            eprintln!(
                "round {:>4}  accuracy {:.4}  loss {:.4}  attackers selected {}",
                r.round, r.accuracy, r.loss, r.attackers_selected
            );
        }
    })
    .map_err(runtime)?;
    let file = std::fs::File::create(csv_path).map_err(|e| runtime(format!("{}: {e}", csv_path.display())))?;
    write_csv(std::io::BufWriter::new(file), cfg, &outcome).map_err(runtime)?;
    let summary = Summary::new(cfg, &outcome);
    let json = serde_json::to_string_pretty(&summary).map_err(runtime)?;
    std::fs::write(json_path, json + "\n").map_err(|e| runtime(format!("{}: {e}", json_path.display())))?;
    Ok(summary)
}

/// `shfl run CONFIG --out CSV`.
pub fn cmd_run(
    config_path: &Path,
    csv_path: &Path,
    json_path: Option<&Path>,
    quiet: bool,
) -> Result<Summary, CliError> {
    let cfg = config::load(config_path).map_err(|e| CliError::Validation(format!("{}: {e}", config_path.display())))?;
    let json_path = json_path.map_or_else(|| summary_path(csv_path), Path::to_path_buf);
    run_config(&cfg, csv_path, &json_path, quiet)
}

//! `shfl plot-data`: merge run CSVs into one long-format table of
//! `(experiment_label, round, accuracy)` for external plotting.

use std::io::Write;
use std::path::Path;

use crate::run::CSV_HEADER;
use crate::{runtime, CliError};

/// Default label: the file stem.
pub fn default_label(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Writes the merged table. `labels`, when given, must match `inputs` in
/// length. Returns the number of data rows written.
pub fn cmd_plot_data(inputs: &[&Path], labels: Option<&[String]>, out: impl Write) -> Result<usize, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Validation("plot-data needs at least one CSV".into()));
    }
    if let Some(l) = labels {
        if l.len() != inputs.len() {
            return Err(CliError::Validation(format!(
                "{} labels given for {} inputs",
                l.len(),
                inputs.len()
            )));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["experiment_label", "round", "accuracy"])
        .map_err(runtime)?;
    let mut rows = 0;
    for (i, path) in inputs.iter().enumerate() {
        let label = labels.map_or_else(|| default_label(path), |l| l[i].clone());
        let mut rd =
            csv::Reader::from_path(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let header = rd
            .headers()
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        if header.iter().ne(CSV_HEADER) {
            return Err(CliError::Validation(format!(
                "{}: header {:?} does not match the run schema {:?}",
                path.display(),
                header.iter().collect::<Vec<_>>(),
                CSV_HEADER
            )));
        }
        for rec in rd.records() {
            let rec = rec.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            w.write_record([label.as_str(), &rec[0], &rec[1]]).map_err(runtime)?;
            rows += 1;
        }
    }
    w.flush().map_err(runtime)?;
    Ok(rows)
}

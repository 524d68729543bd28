//! Command implementations behind the `shfl` binary.

pub mod config;
pub mod kkt;
pub mod plot;
pub mod run;

use std::fmt;

/// A command failure and the exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: config, instance file or CSV schema.
    Validation(String),
    /// IO or simulation failure.
    Runtime(String),
    /// A KKT instance disagreed with the oracle.
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) | CliError::Verification(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub(crate) fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// At least 10 significant digits; fixed notation in the usual range,
/// scientific outside it.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        return "0.000000000000".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..15).contains(&mag) {
        let decimals = (11 - mag).max(1) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.11e}")
    }
}

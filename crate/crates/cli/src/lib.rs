//! Driver for `dkp`: config parsing, the five subcommands, and their artifacts.
//!
//! Every run ends with `report.json` in the output directory. Exit status is 0 when
//! every check passes, 1 when a check fails and 2 on an error.

pub mod commands;
pub mod config;
pub mod report;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use dkp_core::snapshot::write_atomic;
use thiserror::Error;

pub use config::{parse_config, RunConfig};
pub use report::{Check, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dkp_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Csv(_) => "Io",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Invariants,
    FrobeniusCheck,
    Hodograph,
    Coords,
}

impl Subcommand {
    pub const ALL: [Subcommand; 5] = [
        Subcommand::Simulate,
        Subcommand::Invariants,
        Subcommand::FrobeniusCheck,
        Subcommand::Hodograph,
        Subcommand::Coords,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Invariants => "invariants",
            Subcommand::FrobeniusCheck => "frobenius-check",
            Subcommand::Hodograph => "hodograph",
            Subcommand::Coords => "coords",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown subcommand '{s}'"))
    }
}

fn execute(sub: Subcommand, config_path: &Path, out: Option<&Path>) -> commands::Outcome {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| dkp_core::Error::BadConfig(format!("config: {}: {e}", config_path.display())))?;
    let cfg = parse_config(&text)?;
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.directory.clone())
        .ok_or_else(|| dkp_core::Error::BadConfig("output.directory: required (or pass --out)".into()))?;
    let cfg_dir = config_path.parent().unwrap_or(Path::new("."));
    match sub {
        Subcommand::Simulate => commands::simulate(&cfg, &out),
        Subcommand::Invariants => commands::invariants(&cfg, cfg_dir, &out),
        Subcommand::FrobeniusCheck => commands::frobenius_check(&cfg, &out),
        Subcommand::Hodograph => commands::hodograph(&cfg, &out),
        Subcommand::Coords => commands::coords(&cfg, &out),
    }
}

/// Runs one subcommand and writes `report.json` into the output directory when there is
/// one. The report is returned in every case, including configuration errors.
pub fn run(sub: Subcommand, config_path: &Path, out: Option<&Path>) -> Report {
    let report = match execute(sub, config_path, out) {
        Ok((checks, info)) => Report::from_checks(sub.name(), checks, info),
        Err(e) => Report::from_error(sub.name(), &e),
    };
    if let Some(dir) = out {
        // a report that cannot be written is still printed by the caller
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = write_atomic(&dir.join("report.json"), report.to_json().as_bytes());
        }
    }
    report
}

use std::collections::BTreeMap;
use std::path::Path;

use dkp_core::snapshot::write_atomic;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    /// Passes iff `value <= tol`; a NaN value never passes.
    pub fn new(name: &str, value: f64, tol: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            tol,
            pass: value <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub subcommand: String,
    /// `pass`, `fail` or `error`
    pub status: String,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub info: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
}

impl Report {
    pub fn from_checks(subcommand: &str, checks: Vec<Check>, info: BTreeMap<String, Value>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Report {
            subcommand: subcommand.to_string(),
            status: if pass { "pass" } else { "fail" }.into(),
            checks,
            info,
            error: None,
        }
    }

    pub fn from_error(subcommand: &str, err: &CliError) -> Self {
        Report {
            subcommand: subcommand.to_string(),
            status: "error".into(),
            checks: Vec::new(),
            info: BTreeMap::new(),
            error: Some(ErrorReport {
                kind: err.kind().into(),
                message: err.to_string(),
            }),
        }
    }

    /// 0 when every check passed, 1 on a failed check, 2 on an error.
    pub fn exit_code(&self) -> i32 {
        match self.status.as_str() {
            "pass" => 0,
            "fail" => 1,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Buffers a CSV table in memory and writes it atomically.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<I, S>(header: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn row(&mut self, cells: Vec<String>) -> Result<(), CliError> {
        self.writer.write_record(cells)?;
        Ok(())
    }

    pub fn save(self, path: &Path) -> Result<(), CliError> {
        let bytes = self.writer.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
        write_atomic(path, &bytes)?;
        Ok(())
    }
}

/// Shortest round-trip decimal form, so reruns are byte-identical.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

//! Report documents and their JSON and CSV encodings.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;

pub const REPORT_SCHEMA: &str = "subgrad-arena.report";
pub const SCHEMA_VERSION: u32 = 1;

/// One self-describing report. Deterministic given the configuration;
/// run metadata such as timestamps goes to the sidecar instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub schema_version: u32,
    pub library_version: String,
    pub config: ExperimentConfig,
    pub pass: bool,
    /// Identifiers of the checks that failed.
    pub failing: Vec<String>,
    pub result: serde_json::Value,
}

impl Report {
    pub fn new(config: &ExperimentConfig, failing: Vec<String>, result: serde_json::Value) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            schema_version: SCHEMA_VERSION,
            library_version: subgrad_core::VERSION.into(),
            config: config.resolved(),
            pass: failing.is_empty(),
            failing,
            result,
        }
    }
}

/// Rows for the CSV encoding of a report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        self.rows
            .push(row.into_iter().map(|c| c.to_string()).collect());
    }
}

pub fn encode_json(report: &Report) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(report)?;
    out.push(b'\n');
    Ok(out)
}

/// `#`-prefixed lines carrying the schema, version, verdict and config,
/// then a header row and the table.
pub fn encode_csv(report: &Report, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    writeln!(
        out,
        "# schema={} schema_version={}",
        report.schema, report.schema_version
    )?;
    writeln!(out, "# library_version={}", report.library_version)?;
    writeln!(out, "# config={}", serde_json::to_string(&report.config)?)?;
    writeln!(
        out,
        "# pass={} failing={}",
        report.pass,
        report.failing.join(";")
    )?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(out)
}

pub fn encode(report: &Report, table: &Table, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => encode_json(report),
        Format::Csv => encode_csv(report, table),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub report: PathBuf,
    pub unix_time_seconds: u64,
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub library_version: String,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes the report bytes to `out` and the run metadata next to it.
pub fn write_report(
    out: &Path,
    bytes: &[u8],
    elapsed: Duration,
    threads: usize,
) -> Result<(), CliError> {
    std::fs::write(out, bytes)?;
    let meta = Metadata {
        report: out.to_path_buf(),
        unix_time_seconds: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        elapsed_seconds: elapsed.as_secs_f64(),
        threads,
        library_version: subgrad_core::VERSION.into(),
    };
    let mut text = serde_json::to_vec_pretty(&meta)?;
    text.push(b'\n');
    std::fs::write(sidecar_path(out), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[test]
    fn csv_quotes_fields_with_commas() {
        let cfg = ExperimentConfig::new(Command::Verify);
        let report = Report::new(&cfg, vec![], serde_json::Value::Null);
        let mut t = Table::new(&["id", "detail"]);
        t.push(["a", "n = 3, c = 0.1"]);
        let text = String::from_utf8(encode_csv(&report, &t).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[4], "id,detail");
        assert_eq!(lines[5], "a,\"n = 3, c = 0.1\"");
        assert!(lines[2].contains("\"epsilon\":0.05"));
    }

    #[test]
    fn sidecar_sits_next_to_the_report() {
        assert_eq!(
            sidecar_path(Path::new("/tmp/r.json")),
            PathBuf::from("/tmp/r.json.meta.json")
        );
    }
}

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use absorption_core::Table;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
    pub note: String,
}

impl Check {
    /// Passes when `measured ≤ limit`.
    pub fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured <= limit,
            measured,
            limit,
            note: String::new(),
        }
    }

    /// Passes when `measured ≥ limit`.
    pub fn at_least(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            passed: measured >= limit,
            ..Self::at_most(name, measured, limit)
        }
    }

    pub fn flag(name: &str, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            measured: passed as u8 as f64,
            limit: 1.0,
            note: String::new(),
        }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub tolerance_scale: f64,
    /// Tolerance used by each invoked operation, keyed `operation.quantity`.
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
    /// Scenario-specific measurements.
    pub summary: serde_json::Value,
    /// Every file written, relative to the output directory.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Shortest form is not used on purpose: every value gets 17 significant
/// digits so that columns line up and parse back bit for bit.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn write_csv<W: Write>(out: W, table: &Table) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&x| format_float(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    write_csv(BufWriter::new(file), table).map_err(|e| io_error(path, e))
}

pub fn emit_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn emit_manifest(path: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    emit_json(path, manifest)
}

/// Reads a CSV written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Table, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_error(path, e))?;
    let columns: Vec<String> = r.headers().map_err(|e| io_error(path, e))?.iter().map(String::from).collect();
    let mut table = Table::new(columns);
    for record in r.records() {
        let record = record.map_err(|e| io_error(path, e))?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| io_error(path, format!("'{s}': {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        table.push(row);
    }
    Ok(table)
}

/// Collects output files in the order they are written.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| io_error(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        emit_csv(&self.root.join(name), table)?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        emit_json(&self.root.join(name), value)?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn into_files(self) -> Vec<String> {
        self.files
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_float(f64::INFINITY), "inf");
        for x in [0.1, 1.0 / 3.0, 6.02e23, 5e-324, f64::MAX, -0.0] {
            assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &Table::new(["t", "u"])).unwrap();
        assert_eq!(buf, b"t,u\n");
    }

    #[test]
    fn lines_end_with_lf() {
        let mut t = Table::new(["x"]);
        t.push(vec![1.0]);
        t.push(vec![2.0]);
        let mut buf = Vec::new();
        write_csv(&mut buf, &t).unwrap();
        assert!(!buf.contains(&b'\r'));
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 3);
    }
}

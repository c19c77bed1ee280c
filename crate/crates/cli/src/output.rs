// Copyright 2026 The butterfly Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License. You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.


//! CSV tables and the run manifest.
//!
//! Every CSV starts with one `#` line recording the toolkit version, master
//! seed, config hash and system sizes, followed by an RFC-4180 header and
//! rows with LF line endings. Floats use Rust's shortest round-trip form, so
//! identical numbers always print identically.

use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub experiment: String,
    pub master_seed: u64,
    pub config_sha256: String,
    pub n_sites: Vec<usize>,
}

impl Provenance {
    pub fn line(&self) -> String {
        let n: Vec<String> = self.n_sites.iter().map(|n| n.to_string()).collect();
        format!(
            "# butterfly {} experiment={} master_seed={} config_sha256={} n_sites={}",
            butterfly_core::VERSION,
            self.experiment,
            self.master_seed,
            self.config_sha256,
            n.join(";")
        )
    }

    /// The `n_sites` field of a provenance line, if present.
    pub fn parse_n_sites(line: &str) -> Option<String> {
        line.split_whitespace()
            .find_map(|f| f.strip_prefix("n_sites="))
            .map(str::to_string)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    U(usize),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => x.to_string(),
            Cell::U(x) => x.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, provenance: &Provenance) -> Result<Vec<u8>> {
        let mut buf = provenance.line().into_bytes();
        buf.push(b'\n');
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(buf);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| CliError::io("csv buffer", e.into_error()))
    }

    pub fn write(&self, path: &Path, provenance: &Provenance) -> Result<()> {
        std::fs::write(path, self.to_csv(provenance)?).map_err(|e| CliError::io(path, e))
    }
}

/// Fitted step-to-time conversion for one system size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub n_sites: usize,
    pub delta_t: f64,
    pub time_per_step: f64,
    pub relative_rms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub master_seed: u64,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub files: Vec<String>,
    pub calibration: Vec<CalibrationEntry>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            experiment: "local-haar".into(),
            master_seed: 9,
            config_sha256: "ab".into(),
            n_sites: vec![8, 10],
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["n_sites", "phi", "ref"]);
        t.push(vec![8usize.into(), 0.1.into(), None.into()]);
        t.push(vec![10usize.into(), (-1.5e-7).into(), Some(2.0).into()]);
        let text = String::from_utf8(t.to_csv(&prov()).unwrap()).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert!(lines[0].starts_with("# butterfly "));
        assert!(lines[0].ends_with("master_seed=9 config_sha256=ab n_sites=8;10"));
        assert_eq!(lines[1], "n_sites,phi,ref");
        assert_eq!(lines[2], "8,0.1,");
        assert_eq!(lines[3], "10,-0.00000015,2");
        assert_eq!(lines[4], "");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn provenance_round_trip() {
        assert_eq!(Provenance::parse_n_sites(&prov().line()).as_deref(), Some("8;10"));
        assert_eq!(Provenance::parse_n_sites("# nothing"), None);
    }
}

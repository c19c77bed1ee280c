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


//! Comparing two curve files, optionally after fitting a step-to-time
//! factor between a stochastic curve and an exact one.

use std::path::Path;

use butterfly_core::stochastic::{self, Calibration};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::Provenance;

/// Columns to read from each file; `None` picks a default.
#[derive(Clone, Debug, Default)]
pub struct CompareOptions {
    pub x_a: Option<String>,
    pub y_a: Option<String>,
    pub x_b: Option<String>,
    pub y_b: Option<String>,
    /// Fit `time = k · step` with `k` in this bracket, treating `a` as the
    /// step curve and `b` as the reference.
    pub calibrate: Option<[f64; 2]>,
    /// Largest acceptable relative RMS deviation.
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub points: usize,
    pub max_abs_deviation: f64,
    pub rms_deviation: f64,
    pub relative_rms: f64,
    /// `∫ |a - b| dx` over the common grid.
    pub integrated_abs_deviation: f64,
    pub calibration: Option<Calibration>,
    pub within_tolerance: Option<bool>,
}

/// A two-column view of a CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub n_sites: Option<String>,
    pub points: Vec<(f64, f64)>,
}

pub fn read_curve(path: &Path, x: Option<&str>, y: Option<&str>) -> Result<Curve> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let n_sites = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(Provenance::parse_n_sites);
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Incompatible(format!("{}: no column `{name}`", path.display())))
    };
    let xi = match x {
        Some(name) => find(name)?,
        None => 0,
    };
    let yi = match y {
        Some(name) => find(name)?,
        None => find("mean").or_else(|_| if header.len() > 1 { Ok(1) } else { find("mean") })?,
    };
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| {
            rec.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| {
                CliError::Incompatible(format!("{}: non-numeric value in column {}", path.display(), &header[i]))
            })
        };
        points.push((parse(xi)?, parse(yi)?));
    }
    if points.is_empty() {
        return Err(CliError::Incompatible(format!("{}: no data rows", path.display())));
    }
    Ok(Curve { n_sites, points })
}

pub fn compare_files(a: &Path, b: &Path, opts: &CompareOptions) -> Result<CompareReport> {
    let ca = read_curve(a, opts.x_a.as_deref(), opts.y_a.as_deref())?;
    let cb = read_curve(b, opts.x_b.as_deref(), opts.y_b.as_deref())?;
    compare_curves(&ca, &cb, opts)
}

pub fn compare_curves(a: &Curve, b: &Curve, opts: &CompareOptions) -> Result<CompareReport> {
    if let (Some(na), Some(nb)) = (&a.n_sites, &b.n_sites) {
        if na != nb {
            return Err(CliError::Incompatible(format!("n_sites {na} vs {nb}")));
        }
    }
    let (xs, simulated, calibration) = match opts.calibrate {
        Some([lo, hi]) => {
            let fit = stochastic::calibrate_step_to_time(&a.points, &b.points, lo, hi)?;
            let sim: Vec<f64> = b
                .points
                .iter()
                .map(|&(t, _)| stochastic::interpolate(&a.points, t / fit.time_per_step).unwrap_or(f64::NAN))
                .collect();
            (b.points.iter().map(|p| p.0).collect::<Vec<_>>(), sim, Some(fit))
        }
        None => {
            let same = a.points.len() == b.points.len()
                && a
                    .points
                    .iter()
                    .zip(&b.points)
                    .all(|(p, q)| (p.0 - q.0).abs() <= 1e-12 * p.0.abs().max(1.0));
            if !same {
                return Err(CliError::Incompatible("x grids differ; use calibration to compare step and time curves".into()));
            }
            (a.points.iter().map(|p| p.0).collect(), a.points.iter().map(|p| p.1).collect(), None)
        }
    };
    let expected: Vec<f64> = b.points.iter().map(|p| p.1).collect();
    let dev: Vec<f64> = simulated.iter().zip(&expected).map(|(s, e)| (s - e).abs()).collect();
    let points = dev.len();
    let max_abs_deviation = dev.iter().copied().fold(0.0, f64::max);
    let rms_deviation = (dev.iter().map(|d| d * d).sum::<f64>() / points as f64).sqrt();
    let relative_rms = if expected.iter().all(|&e| e == 0.0) && max_abs_deviation == 0.0 {
        0.0
    } else {
        stochastic::relative_rms(&simulated, &expected)
    };
    let integrated_abs_deviation = xs
        .windows(2)
        .zip(dev.windows(2))
        .map(|(x, d)| 0.5 * (d[0] + d[1]) * (x[1] - x[0]).abs())
        .sum();
    Ok(CompareReport {
        points,
        max_abs_deviation,
        rms_deviation,
        relative_rms,
        integrated_abs_deviation,
        calibration,
        within_tolerance: opts.tolerance.map(|t| relative_rms <= t),
    })
}

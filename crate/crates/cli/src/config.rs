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


//! Experiment configuration files.
//!
//! A config is one JSON object. Unknown keys are rejected, and every error
//! carries the line (and, for syntax errors, the column) it refers to.

use std::path::Path;

use butterfly_core::{AngularFactor, Axis, EngineeredSign, GlobalMeasurement};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LocalHaar,
    LocalHamiltonian,
    GlobalHamiltonian,
    PhiSweep,
    EpsilonSweep,
    StochasticGrowth,
    StochasticGlobal,
    NoiseSweep,
    Quadrature,
    DoubleEcho,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::LocalHaar => "local-haar",
            ExperimentKind::LocalHamiltonian => "local-hamiltonian",
            ExperimentKind::GlobalHamiltonian => "global-hamiltonian",
            ExperimentKind::PhiSweep => "phi-sweep",
            ExperimentKind::EpsilonSweep => "epsilon-sweep",
            ExperimentKind::StochasticGrowth => "stochastic-growth",
            ExperimentKind::StochasticGlobal => "stochastic-global",
            ExperimentKind::NoiseSweep => "noise-sweep",
            ExperimentKind::Quadrature => "quadrature",
            ExperimentKind::DoubleEcho => "double-echo",
        }
    }
}

fn default_j() -> f64 {
    1.0
}

fn default_j0() -> f64 {
    butterfly_core::models::J0_MHZ_NM3
}

fn default_rows() -> usize {
    1
}

fn default_sign() -> EngineeredSign {
    EngineeredSign::Plus
}

/// Which Hamiltonian (or circuit) to build for each disorder realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Gaussian all-to-all couplings of scale `j`.
    AllToAllGaussian {
        #[serde(default = "default_j")]
        j: f64,
    },
    /// NV center on site 0 with P1 centers at random diamond lattice sites.
    NvP1 {
        density_ppm: f64,
        #[serde(default = "default_sign")]
        sign: EngineeredSign,
        #[serde(default)]
        angular: AngularFactor,
        #[serde(default = "default_j0")]
        j0: f64,
    },
    NvEnsemble {
        density_ppm: f64,
        #[serde(default)]
        angular: AngularFactor,
        #[serde(default = "default_j0")]
        j0: f64,
    },
    /// `J (XX + YY) / r^a` on a chain (`rows = 1`) or a `rows × N/rows`
    /// grid; nearest neighbours only when `a` is absent.
    RydbergXy {
        #[serde(default = "default_rows")]
        rows: usize,
        #[serde(default = "default_j")]
        j: f64,
        #[serde(default)]
        a: Option<f64>,
    },
    CavityTree {
        s: f64,
    },
    ScXy {
        rows: usize,
        #[serde(default = "default_j")]
        j: f64,
    },
    /// Layered random circuit; `depth` replaces the evolution time.
    TrappedIon {
        depth: usize,
    },
    /// A saved model file; the same Hamiltonian for every realization.
    File {
        path: String,
    },
}

impl ModelConfig {
    pub fn is_circuit(&self) -> bool {
        matches!(self, ModelConfig::TrappedIon { .. })
    }

    /// Whether realizations differ from each other.
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            ModelConfig::AllToAllGaussian { .. }
                | ModelConfig::NvP1 { .. }
                | ModelConfig::NvEnsemble { .. }
                | ModelConfig::TrappedIon { .. }
        )
    }
}

/// A single size or a list of sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteList {
    One(usize),
    Many(Vec<usize>),
}

impl SiteList {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            SiteList::One(n) => vec![*n],
            SiteList::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ButterflyConfig {
    #[serde(default)]
    pub site: usize,
    #[serde(default = "default_axis")]
    pub axis: Axis,
}

fn default_axis() -> Axis {
    Axis::X
}

impl Default for ButterflyConfig {
    fn default() -> Self {
        Self {
            site: 0,
            axis: Axis::X,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    #[default]
    Local,
    Global,
}

/// Which error channel a noise sweep varies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseChannel {
    #[default]
    Evolution,
    Readout,
    Init,
}

/// Fit of the stochastic step axis to exact evolution time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Times at which the exact curve is evaluated; the fit uses all of them.
    pub times: Vec<f64>,
    /// Search bracket for the time per step.
    pub bracket: [f64; 2],
}

fn default_realizations() -> usize {
    1
}

fn default_samples() -> usize {
    1000
}

fn default_trotter_steps() -> usize {
    200
}

fn default_stride() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    pub n_sites: SiteList,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub phis: Option<Vec<f64>>,
    #[serde(default)]
    pub eps_bars: Option<Vec<f64>>,
    #[serde(default)]
    pub gammas: Option<Vec<f64>>,
    /// Disorder realizations, Haar samples, stochastic realizations or
    /// random circuits, depending on the experiment.
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Monte-Carlo samples per circuit (stochastic-global).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Number of stochastic steps.
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub delta_t: Option<f64>,
    /// Keep every `stride`-th step in growth curves.
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub butterfly: ButterflyConfig,
    #[serde(default)]
    pub protocol: ProtocolKind,
    #[serde(default = "default_measurement")]
    pub measurement: GlobalMeasurement,
    #[serde(default)]
    pub noise_channel: NoiseChannel,
    #[serde(default = "default_trotter_steps")]
    pub trotter_steps: usize,
    #[serde(default)]
    pub calibration: Option<CalibrationConfig>,
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<String>,
    /// Worker threads; absent or 0 uses the default.
    #[serde(default)]
    pub parallelism: Option<usize>,
}

fn default_measurement() -> GlobalMeasurement {
    GlobalMeasurement::Sx
}

/// A parsed config together with its source text, for locating errors.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub source: String,
    pub origin: String,
}

impl LoadedConfig {
    pub fn from_str(source: &str, origin: &str) -> Result<Self> {
        let config = serde_json::from_str(source).map_err(|e| CliError::Schema {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: strip_position(&e.to_string()),
        })?;
        Ok(Self {
            config,
            source: source.to_string(),
            origin: origin.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_str(&source, &path.display().to_string())
    }

    /// Line of the first occurrence of `"key"`, or 1 when absent.
    pub fn line_of(&self, key: &str) -> usize {
        let needle = format!("\"{key}\"");
        self.source
            .lines()
            .position(|l| l.contains(&needle))
            .map_or(1, |i| i + 1)
    }

    /// SHA-256 of the config text as read.
    pub fn sha256(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.source.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

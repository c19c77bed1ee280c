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


//! Experiment runner: config parsing, validation, seeded execution on a
//! thread pool and CSV/JSON output.

pub mod compare;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod setup;
pub mod validate;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{ExperimentConfig, ExperimentKind, LoadedConfig};
pub use error::{CliError, Result};
pub use output::Manifest;
pub use validate::{validate, Diagnostics};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "BUTTERFLY_THREADS";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the config's `output`.
    pub out: Option<PathBuf>,
    /// Overrides the config's `parallelism`; 0 means the rayon default.
    pub threads: Option<usize>,
    pub seed_override: Option<u64>,
}

/// Validates and runs a config, writing tables and `manifest.json` into the
/// output directory.
pub fn run(mut loaded: LoadedConfig, opts: &RunOptions) -> Result<Manifest> {
    if let Some(seed) = opts.seed_override {
        loaded.config.master_seed = seed;
    }
    let diag = validate(&loaded);
    if !diag.errors.is_empty() {
        return Err(CliError::Invalid(diag.errors));
    }
    let cfg = &loaded.config;
    let dir: PathBuf = match (&opts.out, &cfg.output) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => {
            return Err(CliError::Invalid(vec![format!(
                "{}:1: no output directory; set `output` or pass --out",
                loaded.origin
            )]))
        }
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let threads = opts.threads.or(cfg.parallelism).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let provenance = output::Provenance {
        experiment: cfg.experiment.name().to_string(),
        master_seed: cfg.master_seed,
        config_sha256: loaded.sha256(),
        n_sites: cfg.n_sites.to_vec(),
    };
    let start = Instant::now();
    let outcome = pool.install(|| experiments::execute(cfg, &dir, &provenance))?;
    let mut warnings = diag.warnings;
    warnings.extend(outcome.warnings);
    let manifest = Manifest {
        tool: "butterfly",
        version: butterfly_core::VERSION,
        experiment: provenance.experiment.clone(),
        master_seed: cfg.master_seed,
        config_sha256: provenance.config_sha256.clone(),
        config: cfg.clone(),
        threads: pool.current_num_threads(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        files: outcome.files,
        calibration: outcome.calibration,
        warnings,
    };
    manifest.write(&dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Loads and runs a config file.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<Manifest> {
    run(LoadedConfig::load(path)?, opts)
}

/// Loads and validates a config file. Schema errors come back as a single
/// diagnostic.
pub fn validate_file(path: &Path) -> Result<Diagnostics> {
    match LoadedConfig::load(path) {
        Ok(l) => Ok(validate(&l)),
        Err(e @ CliError::Schema { .. }) => Ok(Diagnostics {
            errors: vec![e.to_string()],
            warnings: vec![],
        }),
        Err(e) => Err(e),
    }
}

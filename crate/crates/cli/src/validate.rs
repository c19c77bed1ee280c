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


//! Checks that a config can run, without running it.

use butterfly_core::haar::MAX_HAAR_SITES;
use butterfly_core::noise::MAX_ORACLE_SITES;
use butterfly_core::stochastic::GateSampler;
use butterfly_core::MAX_DENSE_SITES;
use serde::Serialize;

use crate::config::{ExperimentKind, LoadedConfig, ModelConfig};
use crate::setup::Instance;

/// The stochastic global estimator packs x masks into one machine word.
pub const MAX_ESTIMATOR_SITES: usize = 64;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn is_empty(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Engine {
    Haar,
    Dense,
    Oracle,
    Stochastic,
}

struct Checker<'a> {
    cfg: &'a LoadedConfig,
    out: Diagnostics,
}

impl Checker<'_> {
    fn error(&mut self, key: &str, msg: impl std::fmt::Display) {
        let line = self.cfg.line_of(key);
        self.out.errors.push(format!("{}:{line}: {msg}", self.cfg.origin));
    }

    fn warn(&mut self, key: &str, msg: impl std::fmt::Display) {
        let line = self.cfg.line_of(key);
        self.out.warnings.push(format!("{}:{line}: {msg}", self.cfg.origin));
    }

    /// Present grids must be nonempty and finite; required grids must be
    /// present.
    fn grid(&mut self, key: &str, grid: Option<&Vec<f64>>, required: bool) -> bool {
        match grid {
            None if required => {
                self.error("experiment", format!("`{key}` is required for this experiment"));
                false
            }
            None => true,
            Some(g) if g.is_empty() => {
                self.error(key, format!("`{key}` must not be empty"));
                false
            }
            Some(g) => {
                if let Some(x) = g.iter().find(|x| !x.is_finite()) {
                    self.error(key, format!("`{key}` contains non-finite value {x}"));
                    return false;
                }
                true
            }
        }
    }
}

/// Schema-level and physics sanity checks.
pub fn validate(loaded: &LoadedConfig) -> Diagnostics {
    let c = &loaded.config;
    let mut ck = Checker {
        cfg: loaded,
        out: Diagnostics::default(),
    };
    use ExperimentKind::*;
    let kind = c.experiment;
    let model = c.model.as_ref();
    let ns = c.n_sites.to_vec();

    let needs_model = matches!(
        kind,
        LocalHamiltonian | GlobalHamiltonian | StochasticGrowth | StochasticGlobal | NoiseSweep
    );
    if needs_model && model.is_none() {
        ck.error("experiment", format!("{} needs a `model`", kind.name()));
    }
    if kind == LocalHaar && model.is_some() {
        ck.error("model", "local-haar takes no `model`; use local-hamiltonian");
    }
    let wants_hamiltonian = matches!(kind, StochasticGrowth | StochasticGlobal | NoiseSweep);
    if wants_hamiltonian && model.is_some_and(ModelConfig::is_circuit) {
        ck.error("model", format!("{} needs a Hamiltonian model, not a circuit", kind.name()));
    }

    let engine = match kind {
        StochasticGrowth | StochasticGlobal => Engine::Stochastic,
        NoiseSweep => Engine::Oracle,
        _ if model.is_none() => Engine::Haar,
        _ => Engine::Dense,
    };

    // Grids.
    let timed = model.is_some_and(|m| !m.is_circuit());
    let times_required = timed && !matches!(kind, StochasticGrowth | StochasticGlobal);
    ck.grid("times", c.times.as_ref(), times_required);
    let phis_required = matches!(kind, PhiSweep | Quadrature | DoubleEcho);
    ck.grid("phis", c.phis.as_ref(), phis_required);
    let eps_required = matches!(kind, GlobalHamiltonian | EpsilonSweep | StochasticGlobal)
        || (kind == NoiseSweep && c.protocol == crate::config::ProtocolKind::Global);
    ck.grid("eps_bars", c.eps_bars.as_ref(), eps_required);
    ck.grid("gammas", c.gammas.as_ref(), kind == NoiseSweep);
    if ns.is_empty() {
        ck.error("n_sites", "`n_sites` must not be empty");
    }
    if let Some(t) = &c.times {
        if t.iter().any(|&t| t < 0.0) {
            ck.error("times", "times must be non-negative");
        }
    }
    if let Some(g) = &c.gammas {
        if g.iter().any(|&g| !(0.0..=1.0).contains(&g)) {
            ck.error("gammas", "gammas must lie in [0, 1]");
        }
    }
    if let Some(e) = &c.eps_bars {
        if e.iter().any(|&e| e < 0.0) {
            ck.error("eps_bars", "eps_bars must be non-negative");
        }
        // The Monte-Carlo estimator divides by tan(ε/2), so both ends of
        // (0, π) are excluded there.
        let open = kind == StochasticGlobal;
        for &n in &ns {
            let bad = |&&e: &&f64| {
                let eps = butterfly_core::analytics::epsilon_from_eps_bar(n, e);
                eps > std::f64::consts::PI || (open && (eps <= 0.0 || eps >= std::f64::consts::PI))
            };
            if let Some(&e) = e.iter().find(bad) {
                let range = if open { "(0, π)" } else { "[0, π]" };
                ck.error("eps_bars", format!("eps_bar = {e} gives a rotation angle outside {range} at n_sites = {n}"));
            }
        }
    }
    if kind == NoiseSweep {
        if c.times.as_ref().is_some_and(|t| t.len() != 1) {
            ck.error("times", "noise-sweep takes exactly one time");
        }
        if ns.len() != 1 {
            ck.error("n_sites", "noise-sweep takes exactly one n_sites");
        }
    }
    if engine == Engine::Stochastic && c.depth.is_none_or(|d| d == 0) {
        ck.error("experiment", "`depth` must be a positive number of steps");
    }
    for (key, v) in [
        ("realizations", c.realizations),
        ("samples", c.samples),
        ("stride", c.stride),
        ("trotter_steps", c.trotter_steps),
    ] {
        if v == 0 {
            ck.error(key, format!("`{key}` must be at least 1"));
        }
    }
    if let Some(cal) = &c.calibration {
        if kind != StochasticGrowth {
            ck.error("calibration", "`calibration` only applies to stochastic-growth");
        }
        if cal.times.len() < 2 {
            ck.error("calibration", "calibration needs at least two times");
        }
        if !(cal.bracket[0] > 0.0 && cal.bracket[1] > cal.bracket[0]) {
            ck.error("bracket", "calibration bracket must satisfy 0 < lo < hi");
        }
    }

    // Sizes.
    for &n in &ns {
        if n == 0 {
            ck.error("n_sites", "n_sites must be at least 1");
            continue;
        }
        if c.butterfly.site >= n {
            ck.error("butterfly", format!("butterfly site {} out of range for n_sites = {n}", c.butterfly.site));
        }
        let (limit, what) = match engine {
            Engine::Haar => (MAX_HAAR_SITES, "Haar sampling limit"),
            Engine::Dense => (MAX_DENSE_SITES, "dense limit"),
            Engine::Oracle => (MAX_ORACLE_SITES, "density-matrix oracle limit"),
            Engine::Stochastic if kind == StochasticGlobal => (MAX_ESTIMATOR_SITES, "stochastic estimator limit"),
            Engine::Stochastic => (usize::MAX, ""),
        };
        if n > limit {
            ck.error("n_sites", format!("n_sites = {n} exceeds {what} of {limit}"));
            continue;
        }
        if c.calibration.is_some() && n > MAX_DENSE_SITES {
            ck.error("calibration", format!("calibration at n_sites = {n} exceeds dense limit of {MAX_DENSE_SITES}"));
        }
        // Building realization 0 catches bad geometry and gate probabilities.
        let Some(m) = model else { continue };
        let inst = match Instance::build(m, n, c.master_seed, 0) {
            Ok(i) => i,
            Err(e) => {
                ck.error("model", format!("n_sites = {n}: {e}"));
                continue;
            }
        };
        if engine == Engine::Stochastic {
            let Ok(sm) = inst.hamiltonian_model() else { continue };
            let sampler = match c.delta_t {
                Some(dt) => GateSampler::new(sm, dt),
                None => GateSampler::with_default_delta_t(sm),
            };
            match sampler {
                Ok(s) => {
                    if let Some(w) = s.warning() {
                        ck.warn("delta_t", format!("n_sites = {n}: {w}"));
                    }
                }
                Err(e) => ck.error("delta_t", format!("n_sites = {n}: {e}")),
            }
        }
    }
    ck.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CliError;

    fn check(src: &str) -> Diagnostics {
        validate(&LoadedConfig::from_str(src, "c.json").unwrap())
    }

    #[test]
    fn valid_config_is_clean() {
        let d = check(r#"{"experiment": "local-haar", "n_sites": [4, 6], "phis": [0.0, 0.1], "master_seed": 1}"#);
        assert!(d.is_empty(), "{d:?}");
    }

    #[test]
    fn size_limits() {
        let d = check(
            r#"{"experiment": "local-hamiltonian", "n_sites": 25, "times": [1.0], "master_seed": 1,
                "model": {"kind": "all-to-all-gaussian"}}"#,
        );
        assert!(d.errors.iter().any(|e| e.contains("exceeds dense limit")), "{d:?}");
        let d = check(r#"{"experiment": "local-haar", "n_sites": 14, "master_seed": 1}"#);
        assert!(d.errors.iter().any(|e| e.contains("Haar sampling limit")), "{d:?}");
        let d = check(
            r#"{"experiment": "noise-sweep", "n_sites": 7, "times": [1.0], "gammas": [0.0], "master_seed": 1,
                "model": {"kind": "all-to-all-gaussian"}}"#,
        );
        assert!(d.errors.iter().any(|e| e.contains("oracle limit")), "{d:?}");
    }

    #[test]
    fn empty_grid_and_missing_pieces() {
        let d = check("{\"experiment\": \"phi-sweep\",\n \"n_sites\": 4,\n \"phis\": [],\n \"master_seed\": 1}");
        assert_eq!(d.errors, vec!["c.json:3: `phis` must not be empty".to_string()]);
        let d = check(r#"{"experiment": "stochastic-growth", "n_sites": 4, "master_seed": 1}"#);
        assert!(d.errors.iter().any(|e| e.contains("needs a `model`")));
        assert!(d.errors.iter().any(|e| e.contains("`depth`")));
    }

    #[test]
    fn large_delta_t_warns_with_max_probability() {
        let d = check(
            r#"{"experiment": "stochastic-growth", "n_sites": 6, "depth": 10, "delta_t": 0.01, "master_seed": 1,
                "model": {"kind": "rydberg-xy", "j": 4.0}}"#,
        );
        assert!(d.errors.is_empty(), "{d:?}");
        assert!(d.warnings.iter().any(|w| w.contains("max P_ij = 0.320")), "{d:?}");
        let d = check(
            r#"{"experiment": "stochastic-growth", "n_sites": 6, "depth": 10, "delta_t": 1.0, "master_seed": 1,
                "model": {"kind": "rydberg-xy", "j": 4.0}}"#,
        );
        assert!(d.errors.iter().any(|e| e.contains("exceeds 1")), "{d:?}");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Invalid(vec![]).exit_code(), 2);
        let e: CliError = butterfly_core::Error::ZeroNorm.into();
        assert_eq!(e.exit_code(), 3);
    }
}

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


//! Turning a model section into Hamiltonians and dynamics, one disorder
//! realization at a time.

use butterfly_core::dynamics::Dynamics;
use butterfly_core::haar::sample_haar_unitary;
use butterfly_core::models::{self, CircuitSpec, Geometry, SpinModel};
use butterfly_core::rng::{child_seed, domain};
use butterfly_core::{EvolutionParams, HamiltonianEvolution};

use crate::config::ModelConfig;
use crate::error::{CliError, Result};

/// Seed of realization `r` at size `n` in `domain`.
pub fn realization_seed(master_seed: u64, domain: u64, n: usize, r: usize) -> u64 {
    child_seed(master_seed, domain, ((n as u64) << 32) | r as u64)
}

/// One realization of a model: a Hamiltonian or a gate circuit.
#[derive(Clone, Debug)]
pub enum Instance {
    Hamiltonian(SpinModel),
    Circuit(CircuitSpec),
}

impl Instance {
    pub fn build(model: &ModelConfig, n: usize, master_seed: u64, r: usize) -> Result<Self> {
        let m = match model {
            ModelConfig::AllToAllGaussian { j } => {
                models::build_all_to_all_gaussian(n, *j, realization_seed(master_seed, domain::COUPLINGS, n, r))?
            }
            ModelConfig::NvP1 {
                density_ppm,
                sign,
                angular,
                j0,
            } => {
                let g = models::sample_positions_3d(n, *density_ppm, realization_seed(master_seed, domain::POSITIONS, n, r))?;
                models::build_hybrid_nv_p1_with(&g, *j0, *sign, *angular)?
            }
            ModelConfig::NvEnsemble { density_ppm, angular, j0 } => {
                let g = models::sample_positions_3d(n, *density_ppm, realization_seed(master_seed, domain::POSITIONS, n, r))?;
                models::build_nv_ensemble_with(&g, *j0, *angular)?
            }
            ModelConfig::RydbergXy { rows, j, a } => {
                let g = grid(n, *rows)?;
                match a {
                    Some(a) => models::build_rydberg_xy(&g, *j, *a)?,
                    None => models::build_rydberg_xy_nearest(&g, *j)?,
                }
            }
            ModelConfig::CavityTree { s } => models::build_cavity_tree(n, *s)?,
            ModelConfig::ScXy { rows, j } => models::build_sc_xy(&grid(n, *rows)?, *j)?,
            ModelConfig::TrappedIon { depth } => {
                let seed = realization_seed(master_seed, domain::CIRCUIT, n, r);
                return Ok(Instance::Circuit(models::build_trapped_ion_circuit(n, *depth, seed)?));
            }
            ModelConfig::File { path } => {
                let m = SpinModel::load(path)?;
                if m.n_sites() != n {
                    return Err(CliError::Invalid(vec![format!(
                        "model file {path} has {} sites, config asks for {n}",
                        m.n_sites()
                    )]));
                }
                m
            }
        };
        Ok(Instance::Hamiltonian(m))
    }

    /// The Hamiltonian, for engines that need one.
    pub fn hamiltonian_model(&self) -> Result<&SpinModel> {
        match self {
            Instance::Hamiltonian(m) => Ok(m),
            Instance::Circuit(_) => Err(CliError::Invalid(vec![
                "this experiment needs a Hamiltonian model, not a circuit".into(),
            ])),
        }
    }

    /// `U` at evolution time `time`; circuits ignore the time.
    pub fn dynamics(&self, time: f64) -> Result<Box<dyn Dynamics>> {
        Ok(match self {
            Instance::Hamiltonian(m) => Box::new(HamiltonianEvolution::new(&m.hamiltonian, EvolutionParams::new(time))?),
            Instance::Circuit(c) => Box::new(c.to_gate_circuit()?),
        })
    }
}

/// A chain when `rows == 1`, otherwise a `rows × n/rows` grid.
fn grid(n: usize, rows: usize) -> Result<Geometry> {
    if rows == 0 || n % rows != 0 {
        return Err(CliError::Invalid(vec![format!("rows = {rows} does not divide n_sites = {n}")]));
    }
    Ok(if rows == 1 {
        Geometry::chain(n, 1.0)
    } else {
        Geometry::square(rows, n / rows)
    })
}

/// Dynamics of realization `r`: the model at `time`, or a Haar unitary when
/// no model is given.
pub fn realization_dynamics(
    model: Option<&ModelConfig>,
    n: usize,
    time: f64,
    master_seed: u64,
    r: usize,
) -> Result<Box<dyn Dynamics>> {
    match model {
        Some(m) => Instance::build(m, n, master_seed, r)?.dynamics(time),
        None => Ok(Box::new(sample_haar_unitary(
            n,
            realization_seed(master_seed, domain::HAAR_UNITARY, n, r),
        )?)),
    }
}

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

//! Simulation toolkit for butterfly metrology: exact state-vector dynamics,
//! Haar-random reference curves, a stochastic Clifford operator-growth model
//! and noise estimates.
//!
//! Conventions shared by every module:
//!
//! * site `k` is bit `k` of a computational basis index;
//! * `|0>` is the `+1` eigenstate of `σᶻ`, so `S_z |s> = (N/2 - popcount(s)) |s>`;
//! * the signal is imprinted by `exp(-i φ S_z)` with `S_z = (1/2) Σ σᶻ`;
//! * energies are in MHz, distances in nm and times in µs (no factors of 2π).

pub mod analytics;
pub mod clifford;
pub mod dynamics;
pub mod error;
pub mod haar;
pub mod krylov;
pub mod models;
pub mod noise;
pub mod operator;
pub mod pauli;
pub mod polarization;
pub mod protocols;
pub mod rng;
pub mod state;
pub mod stochastic;

pub use dynamics::{Dynamics, GateCircuit, HamiltonianEvolution, IdentityDynamics};
pub use error::{Error, Result};
pub use haar::HaarUnitary;
pub use krylov::{evolve, EvolutionParams};
pub use models::{AngularFactor, CircuitSpec, EngineeredSign, Geometry, LatticeKind, SpinModel};
pub use noise::{NoiseModel, VolumeEstimate};
pub use operator::CompiledOperator;
pub use pauli::{Axis, Pauli, PauliString, PauliSum, PauliTerm};
pub use polarization::PolarizationDistribution;
pub use protocols::{
    GlobalMeasurement, GlobalProtocolConfig, LocalProtocolConfig, SensitivityResult,
};
pub use state::{StateVector, MAX_DENSE_SITES};
pub use stochastic::{CliffordCircuit, GateSampler, GrowthRecord};

/// Crate version, embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub(crate) use num_complex::Complex64 as C64;

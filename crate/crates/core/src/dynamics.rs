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

//! The scrambling unitary `U` used by the protocols, behind one trait.

use crate::error::{check_sites, Error, Result};
use crate::haar::HaarUnitary;
use crate::krylov::{evolve_compiled, EvolutionParams};
use crate::operator::CompiledOperator;
use crate::pauli::PauliSum;
use crate::state::StateVector;
use crate::C64;

/// A unitary with both directions available: `forward` is `U`, `backward`
/// is `U†`.
pub trait Dynamics: Send + Sync {
    fn n_sites(&self) -> usize;
    fn forward(&self, psi: &StateVector) -> Result<StateVector>;
    fn backward(&self, psi: &StateVector) -> Result<StateVector>;
}

/// `U = exp(-i H t)` via Krylov propagation.
#[derive(Clone, Debug)]
pub struct HamiltonianEvolution {
    op: CompiledOperator,
    params: EvolutionParams,
}

impl HamiltonianEvolution {
    pub fn new(h: &PauliSum, params: EvolutionParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            op: CompiledOperator::new(h)?,
            params,
        })
    }

    pub fn from_compiled(op: CompiledOperator, params: EvolutionParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { op, params })
    }

    pub fn time(&self) -> f64 {
        self.params.time
    }

    pub fn params(&self) -> &EvolutionParams {
        &self.params
    }

    pub fn operator(&self) -> &CompiledOperator {
        &self.op
    }

    /// Same Hamiltonian, different evolution time.
    pub fn at_time(&self, time: f64) -> Self {
        Self {
            op: self.op.clone(),
            params: self.params.with_time(time),
        }
    }
}

impl Dynamics for HamiltonianEvolution {
    fn n_sites(&self) -> usize {
        self.op.n_sites()
    }

    fn forward(&self, psi: &StateVector) -> Result<StateVector> {
        evolve_compiled(&self.op, &self.params, psi)
    }

    fn backward(&self, psi: &StateVector) -> Result<StateVector> {
        evolve_compiled(&self.op, &self.params.with_time(-self.params.time), psi)
    }
}

impl Dynamics for HaarUnitary {
    fn n_sites(&self) -> usize {
        HaarUnitary::n_sites(self)
    }

    fn forward(&self, psi: &StateVector) -> Result<StateVector> {
        self.apply(psi)
    }

    fn backward(&self, psi: &StateVector) -> Result<StateVector> {
        self.apply_adjoint(psi)
    }
}

/// `U = 1`.
#[derive(Clone, Copy, Debug)]
pub struct IdentityDynamics {
    pub n_sites: usize,
}

impl Dynamics for IdentityDynamics {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn forward(&self, psi: &StateVector) -> Result<StateVector> {
        check_sites(self.n_sites, psi.n_sites())?;
        Ok(psi.clone())
    }

    fn backward(&self, psi: &StateVector) -> Result<StateVector> {
        self.forward(psi)
    }
}

/// One- or two-qubit gate given as a dense matrix `m[out][in]`.
#[derive(Clone, Debug, PartialEq)]
pub enum DenseGate {
    One { site: usize, m: [[C64; 2]; 2] },
    /// Local basis index `bit_a + 2 bit_b`.
    Two { a: usize, b: usize, m: [[C64; 4]; 4] },
}

impl DenseGate {
    pub fn adjoint(&self) -> DenseGate {
        match self {
            DenseGate::One { site, m } => DenseGate::One {
                site: *site,
                m: std::array::from_fn(|r| std::array::from_fn(|c| m[c][r].conj())),
            },
            DenseGate::Two { a, b, m } => DenseGate::Two {
                a: *a,
                b: *b,
                m: std::array::from_fn(|r| std::array::from_fn(|c| m[c][r].conj())),
            },
        }
    }

    fn apply(&self, psi: &mut StateVector) {
        match self {
            DenseGate::One { site, m } => psi.apply_single_qubit(*site, m),
            DenseGate::Two { a, b, m } => psi.apply_two_qubit(*a, *b, m),
        }
    }

    fn max_site(&self) -> usize {
        match self {
            DenseGate::One { site, .. } => *site,
            DenseGate::Two { a, b, .. } => (*a).max(*b),
        }
    }
}

/// Gates applied in list order (the first gate acts first).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GateCircuit {
    n_sites: usize,
    gates: Vec<DenseGate>,
}

impl GateCircuit {
    pub fn new(n_sites: usize) -> Self {
        Self {
            n_sites,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: DenseGate) -> Result<()> {
        if gate.max_site() >= self.n_sites {
            return Err(Error::SiteOutOfRange {
                site: gate.max_site(),
                n_sites: self.n_sites,
            });
        }
        if let DenseGate::Two { a, b, .. } = gate {
            if a == b {
                return Err(Error::CoincidentSites(a, b));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn gates(&self) -> &[DenseGate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

impl Dynamics for GateCircuit {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn forward(&self, psi: &StateVector) -> Result<StateVector> {
        check_sites(self.n_sites, psi.n_sites())?;
        let mut out = psi.clone();
        for g in &self.gates {
            g.apply(&mut out);
        }
        Ok(out)
    }

    fn backward(&self, psi: &StateVector) -> Result<StateVector> {
        check_sites(self.n_sites, psi.n_sites())?;
        let mut out = psi.clone();
        for g in self.gates.iter().rev() {
            g.adjoint().apply(&mut out);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::sample_haar_unitary;
    use crate::state::tests::random_state;

    fn check_inverse(d: &dyn Dynamics, n: usize) {
        let psi = random_state(n, 5);
        let back = d.backward(&d.forward(&psi).unwrap()).unwrap();
        assert!(back.distance(&psi).unwrap() < 1e-9);
    }

    #[test]
    fn backward_inverts_forward() {
        let h = PauliSum::collective(4, crate::pauli::Axis::X);
        check_inverse(&HamiltonianEvolution::new(&h, EvolutionParams::new(0.7)).unwrap(), 4);
        check_inverse(&sample_haar_unitary(4, 3).unwrap(), 4);
        check_inverse(&IdentityDynamics { n_sites: 4 }, 4);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let had = [[C64::new(s, 0.0), C64::new(s, 0.0)], [C64::new(s, 0.0), C64::new(-s, 0.0)]];
        let mut c = GateCircuit::new(4);
        c.push(DenseGate::One { site: 2, m: had }).unwrap();
        let phase = std::array::from_fn(|r| {
            std::array::from_fn(|k| if r == k { C64::from_polar(1.0, 0.3 * r as f64) } else { C64::new(0.0, 0.0) })
        });
        c.push(DenseGate::Two { a: 1, b: 2, m: phase }).unwrap();
        assert!(c.push(DenseGate::One { site: 4, m: had }).is_err());
        check_inverse(&c, 4);
    }
}

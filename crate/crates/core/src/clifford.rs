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

//! The two-qubit Clifford group and its action on Pauli strings.
//!
//! Elements are enumerated once by breadth-first search over products of
//! `H⊗I`, `I⊗H`, `S⊗I`, `I⊗S` and CNOT, with global phases divided out, so
//! ids are stable across runs. Id 0 is the identity. For every element the
//! conjugation `G† P G` of the 16 two-site Paulis is tabulated.
//!
//! Two-site Paulis are indexed by `x0 | z0 << 1 | x1 << 2 | z1 << 3`, where
//! site 0 is the first site of the gate (low bit of the local basis index).

use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::C64;

pub const CLIFFORD_GROUP_ORDER: usize = 11520;

pub type Matrix4 = [[C64; 4]; 4];

/// Image of one two-site Pauli: `G† P G = (-1)^negative Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliImage {
    pub index: u8,
    pub negative: bool,
}

pub struct CliffordGroup {
    matrices: Vec<Matrix4>,
    table: Vec<[PauliImage; 16]>,
    ids: HashMap<Vec<i64>, u16>,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn mul(a: &Matrix4, b: &Matrix4) -> Matrix4 {
    std::array::from_fn(|r| std::array::from_fn(|c| (0..4).map(|k| a[r][k] * b[k][c]).sum()))
}

fn adjoint(a: &Matrix4) -> Matrix4 {
    std::array::from_fn(|r| std::array::from_fn(|c| a[c][r].conj()))
}

fn kron(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> Matrix4 {
    // Local index bit0 + 2 bit1: `a` acts on bit 0, `b` on bit 1.
    std::array::from_fn(|r| std::array::from_fn(|c| b[r >> 1][c >> 1] * a[r & 1][c & 1]))
}

fn pauli_2x2(p: Pauli) -> [[C64; 2]; 2] {
    let (o, l, i) = (zero(), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    match p {
        Pauli::I => [[l, o], [o, l]],
        Pauli::X => [[o, l], [l, o]],
        Pauli::Y => [[o, -i], [i, o]],
        Pauli::Z => [[l, o], [o, -l]],
    }
}

/// Dense matrix of the two-site Pauli with the given index.
pub fn pauli_matrix(index: u8) -> Matrix4 {
    let (p0, p1) = split_index(index);
    kron(&pauli_2x2(p0), &pauli_2x2(p1))
}

pub fn pauli_index(p0: Pauli, p1: Pauli) -> u8 {
    let (x0, z0) = p0.bits();
    let (x1, z1) = p1.bits();
    x0 as u8 | (z0 as u8) << 1 | (x1 as u8) << 2 | (z1 as u8) << 3
}

pub fn split_index(index: u8) -> (Pauli, Pauli) {
    (
        Pauli::from_bits(index & 1 != 0, index & 2 != 0),
        Pauli::from_bits(index & 4 != 0, index & 8 != 0),
    )
}

/// Key of a matrix modulo global phase.
fn canonical_key(m: &Matrix4) -> Vec<i64> {
    let lead = m
        .iter()
        .flatten()
        .find(|z| z.norm() > 1e-6)
        .expect("unitary has a nonzero entry");
    let phase = lead.conj() / lead.norm();
    m.iter()
        .flatten()
        .flat_map(|z| {
            let w = z * phase;
            [(w.re * 1e6).round() as i64, (w.im * 1e6).round() as i64]
        })
        .collect()
}

fn identify(m: &Matrix4) -> PauliImage {
    for q in 0..16u8 {
        let p = pauli_matrix(q);
        let tr: C64 = (0..4).flat_map(|r| (0..4).map(move |c| (r, c))).map(|(r, c)| p[r][c].conj() * m[r][c]).sum();
        let tr = tr / 4.0;
        if (tr.norm() - 1.0).abs() < 1e-8 {
            assert!(tr.im.abs() < 1e-8, "Clifford image with imaginary sign");
            return PauliImage {
                index: q,
                negative: tr.re < 0.0,
            };
        }
    }
    unreachable!("conjugate of a Pauli by a Clifford is a Pauli")
}

pub fn hadamard() -> [[C64; 2]; 2] {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

pub fn phase_gate() -> [[C64; 2]; 2] {
    [[C64::new(1.0, 0.0), zero()], [zero(), C64::new(0.0, 1.0)]]
}

/// CNOT with control on site 0 and target on site 1.
pub fn cnot() -> Matrix4 {
    let mut m = [[zero(); 4]; 4];
    for (out, inp) in [(0, 0), (3, 1), (2, 2), (1, 3)] {
        m[out][inp] = C64::new(1.0, 0.0);
    }
    m
}

impl CliffordGroup {
    fn build() -> Self {
        let id2 = pauli_2x2(Pauli::I);
        let generators = [
            kron(&hadamard(), &id2),
            kron(&id2, &hadamard()),
            kron(&phase_gate(), &id2),
            kron(&id2, &phase_gate()),
            cnot(),
        ];
        let identity = kron(&id2, &id2);
        let mut matrices = vec![identity];
        let mut ids = HashMap::new();
        ids.insert(canonical_key(&identity), 0u16);
        let mut queue = VecDeque::from([0usize]);
        while let Some(k) = queue.pop_front() {
            for g in &generators {
                let m = mul(g, &matrices[k]);
                let key = canonical_key(&m);
                if !ids.contains_key(&key) {
                    ids.insert(key, matrices.len() as u16);
                    queue.push_back(matrices.len());
                    matrices.push(m);
                }
            }
        }
        assert_eq!(matrices.len(), CLIFFORD_GROUP_ORDER);
        let paulis: Vec<Matrix4> = (0..16).map(pauli_matrix).collect();
        let table = matrices
            .iter()
            .map(|g| {
                let gd = adjoint(g);
                std::array::from_fn(|p| identify(&mul(&gd, &mul(&paulis[p], g))))
            })
            .collect();
        Self { matrices, table, ids }
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrix(&self, id: u16) -> &Matrix4 {
        &self.matrices[id as usize]
    }

    /// Id of a two-qubit Clifford given as a unitary, up to global phase.
    pub fn id_of(&self, m: &Matrix4) -> Option<u16> {
        self.ids.get(&canonical_key(m)).copied()
    }

    /// Conjugation table of one element.
    pub fn action(&self, id: u16) -> &[PauliImage; 16] {
        &self.table[id as usize]
    }
}

/// The group, built on first use.
pub fn group() -> &'static CliffordGroup {
    static GROUP: OnceLock<CliffordGroup> = OnceLock::new();
    GROUP.get_or_init(CliffordGroup::build)
}

/// Conjugation table `P ↦ G† P G` of the element with the given id.
pub fn random_two_qubit_clifford(gate_id: u16) -> Result<&'static [PauliImage; 16]> {
    if gate_id as usize >= CLIFFORD_GROUP_ORDER {
        return Err(Error::InvalidParameter(format!(
            "Clifford id {gate_id} outside [0, {CLIFFORD_GROUP_ORDER})"
        )));
    }
    Ok(group().action(gate_id))
}

pub fn cnot_id() -> u16 {
    group().id_of(&cnot()).expect("CNOT is a generator")
}

/// Replaces `p` by `G† p G` for the gate acting on sites `(a, b)`.
#[inline]
pub fn conjugate_in_place(p: &mut PauliString, a: usize, b: usize, action: &[PauliImage; 16]) {
    let img = action[pauli_index(p.get(a), p.get(b)) as usize];
    let (q0, q1) = split_index(img.index);
    p.set(a, q0);
    p.set(b, q1);
    if img.negative {
        p.add_phase(2);
    }
}

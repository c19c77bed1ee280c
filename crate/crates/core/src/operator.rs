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

//! Matrix-free application of Pauli sums to dense state vectors.
//!
//! Terms are grouped by their X mask. Every group acts as
//! `out[r] += d(r ^ x) psi[r ^ x]` with a diagonal
//! `d(s) = Σ_t w_t (-1)^{popcount(s & z_t)}`, which is cached when memory
//! allows. The gather form keeps each output entry owned by one worker, so
//! the result is independent of the thread count.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{check_sites, Error, Result};
use crate::pauli::PauliSum;
use crate::state::{check_dense, StateVector, I_POW, PAR_LEN};
use crate::C64;

/// Upper bound on memory spent on cached group diagonals.
const DIAG_BUDGET_BYTES: usize = 384 << 20;
const BLOCK: usize = 1 << 11;
/// Largest system for which a dense matrix is ever built.
pub const MAX_MATRIX_SITES: usize = 12;

#[derive(Clone, Debug)]
struct Group {
    x: usize,
    terms: Vec<(usize, C64)>,
    diag: Option<Vec<C64>>,
}

impl Group {
    #[inline]
    fn weight(&self, s: usize) -> C64 {
        match &self.diag {
            Some(d) => d[s],
            None => self
                .terms
                .iter()
                .map(|&(z, w)| if (s & z).count_ones() & 1 == 1 { -w } else { w })
                .sum(),
        }
    }
}

/// A Pauli sum prepared for repeated application at a fixed system size.
#[derive(Clone, Debug)]
pub struct CompiledOperator {
    n_sites: usize,
    groups: Vec<Group>,
    one_norm: f64,
}

impl CompiledOperator {
    pub fn new(h: &PauliSum) -> Result<Self> {
        check_dense(h.n_sites())?;
        let n = h.n_sites();
        let dim = 1usize << n;
        let mut merged: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        let mut one_norm = 0.0;
        for t in h.terms() {
            let (x, z) = t.string.low_masks();
            let w = t.coefficient * I_POW[t.string.y_count() % 4];
            *merged.entry((x as usize, z as usize)).or_default() += w;
            one_norm += t.coefficient.abs();
        }
        let mut by_x: BTreeMap<usize, Vec<(usize, C64)>> = BTreeMap::new();
        for ((x, z), w) in merged {
            if w != C64::new(0.0, 0.0) {
                by_x.entry(x).or_default().push((z, w));
            }
        }
        let cache = by_x.len().saturating_mul(dim * 16) <= DIAG_BUDGET_BYTES;
        let groups = by_x
            .into_iter()
            .map(|(x, terms)| {
                let mut g = Group { x, terms, diag: None };
                if cache && g.terms.len() > 1 {
                    let d = (0..dim).map(|s| g.weight(s)).collect();
                    g.diag = Some(d);
                }
                g
            })
            .collect();
        Ok(Self {
            n_sites: n,
            groups,
            one_norm,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// `Σ |c_k|`, an upper bound on the spectral norm.
    pub fn one_norm(&self) -> f64 {
        self.one_norm
    }

    /// Writes `H input` into `out`.
    pub fn apply_into(&self, input: &[C64], out: &mut [C64]) {
        debug_assert_eq!(input.len(), 1 << self.n_sites);
        debug_assert_eq!(input.len(), out.len());
        let len = input.len();
        let kernel = |(b, block): (usize, &mut [C64])| {
            let start = b * BLOCK;
            block.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
            if len < BLOCK {
                for g in &self.groups {
                    for (k, o) in block.iter_mut().enumerate() {
                        let s = (start + k) ^ g.x;
                        *o += g.weight(s) * input[s];
                    }
                }
                return;
            }
            // The source of a full block is another full block with its
            // entries permuted by the low bits of the flip mask.
            let block: &mut [C64; BLOCK] = block.try_into().expect("full block");
            for g in &self.groups {
                let base = start ^ (g.x & !(BLOCK - 1));
                let xl = g.x & (BLOCK - 1);
                let src: &[C64; BLOCK] = input[base..base + BLOCK].try_into().expect("full block");
                match &g.diag {
                    Some(d) => {
                        let d: &[C64; BLOCK] = d[base..base + BLOCK].try_into().expect("full block");
                        for (k, o) in block.iter_mut().enumerate() {
                            let j = (k ^ xl) & (BLOCK - 1);
                            *o += d[j] * src[j];
                        }
                    }
                    None => {
                        for (k, o) in block.iter_mut().enumerate() {
                            let j = (k ^ xl) & (BLOCK - 1);
                            *o += g.weight(base + j) * src[j];
                        }
                    }
                }
            }
        };
        if out.len() >= PAR_LEN {
            out.par_chunks_mut(BLOCK).enumerate().for_each(kernel);
        } else {
            out.chunks_mut(BLOCK).enumerate().for_each(kernel);
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_sites(self.n_sites, psi.n_sites())?;
        let mut out = vec![C64::new(0.0, 0.0); psi.dim()];
        self.apply_into(psi.amplitudes(), &mut out);
        StateVector::from_raw(self.n_sites, out)
    }
}

/// `H|ψ>` (not normalized).
pub fn apply_hamiltonian(h: &PauliSum, psi: &StateVector) -> Result<StateVector> {
    check_sites(h.n_sites(), psi.n_sites())?;
    CompiledOperator::new(h)?.apply(psi)
}

/// Dense `2^N × 2^N` matrix of a Pauli sum, for small-system oracles.
pub fn dense_matrix(h: &PauliSum) -> Result<DMatrix<C64>> {
    let n = h.n_sites();
    if n > MAX_MATRIX_SITES {
        return Err(Error::TooLarge {
            what: "dense matrix",
            n,
            limit: MAX_MATRIX_SITES,
        });
    }
    let op = CompiledOperator::new(h)?;
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    let mut e = vec![C64::new(0.0, 0.0); dim];
    let mut col = vec![C64::new(0.0, 0.0); dim];
    for j in 0..dim {
        e[j] = C64::new(1.0, 0.0);
        op.apply_into(&e, &mut col);
        m.set_column(j, &nalgebra::DVector::from_column_slice(&col));
        e[j] = C64::new(0.0, 0.0);
    }
    Ok(m)
}

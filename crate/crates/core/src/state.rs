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

//! Dense state vectors over `2^N` computational basis states.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_sites, Error, Result};
use crate::pauli::{Axis, PauliString, PauliSum};
use crate::C64;

/// Largest system handled by the dense engine. A Krylov basis of 30 vectors
/// at this size already needs about 2 GB.
pub const MAX_DENSE_SITES: usize = 22;

/// Amplitude arrays at least this long are processed with rayon.
pub(crate) const PAR_LEN: usize = 1 << 14;
const CHUNK: usize = 1 << 12;

const SNAPSHOT_MAGIC: &[u8; 8] = b"BFLYSNAP";
const SNAPSHOT_VERSION: u32 = 1;

pub(crate) const I_POW: [C64; 4] = [
    C64::new(1.0, 0.0),
    C64::new(0.0, 1.0),
    C64::new(-1.0, 0.0),
    C64::new(0.0, -1.0),
];

/// Sum of `f(k)` over `0..len` with a fixed chunking, so the rounding does
/// not depend on the number of worker threads.
pub(crate) fn det_sum<T, F>(len: usize, f: F) -> T
where
    T: Send + std::iter::Sum<T>,
    F: Fn(usize) -> T + Sync,
{
    if len < PAR_LEN {
        return (0..len).map(&f).sum();
    }
    let partial: Vec<T> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f).sum())
        .collect();
    partial.into_iter().sum()
}

/// `S_z` eigenvalue of basis state `s`.
#[inline]
pub fn magnetization(n_sites: usize, s: usize) -> f64 {
    0.5 * n_sites as f64 - s.count_ones() as f64
}

pub(crate) fn check_dense(n_sites: usize) -> Result<()> {
    if n_sites == 0 {
        return Err(Error::InvalidParameter("n_sites must be positive".into()));
    }
    if n_sites > MAX_DENSE_SITES {
        return Err(Error::TooLarge {
            what: "dense state vector",
            n: n_sites,
            limit: MAX_DENSE_SITES,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amps: Vec<C64>,
    normalized: bool,
}

impl StateVector {
    /// The fully polarized state `|00...0>`.
    pub fn zero(n_sites: usize) -> Result<Self> {
        Self::basis(n_sites, 0)
    }

    pub fn basis(n_sites: usize, index: usize) -> Result<Self> {
        check_dense(n_sites)?;
        let dim = 1usize << n_sites;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for {n_sites} sites"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self {
            n_sites,
            amps,
            normalized: true,
        })
    }

    /// Product state with every site in `a|0> + b|1>` (normalized internally).
    pub fn product(n_sites: usize, single: [C64; 2]) -> Result<Self> {
        check_dense(n_sites)?;
        let norm = (single[0].norm_sqr() + single[1].norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let (a, b) = (single[0] / norm, single[1] / norm);
        let amps = (0..1usize << n_sites)
            .map(|s| {
                let k = s.count_ones() as i32;
                a.powi(n_sites as i32 - k) * b.powi(k)
            })
            .collect();
        Ok(Self {
            n_sites,
            amps,
            normalized: true,
        })
    }

    /// `|+>^N`.
    pub fn plus(n_sites: usize) -> Result<Self> {
        Self::product(n_sites, [C64::new(1.0, 0.0), C64::new(1.0, 0.0)])
    }

    /// `(|00...0> + |11...1>)/sqrt(2)`.
    pub fn ghz(n_sites: usize) -> Result<Self> {
        let mut psi = Self::zero(n_sites)?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        psi.amps[0] = C64::new(h, 0.0);
        let last = psi.amps.len() - 1;
        psi.amps[last] = C64::new(h, 0.0);
        Ok(psi)
    }

    /// Wraps amplitudes that are already normalized (to 1e-10).
    pub fn from_amplitudes(n_sites: usize, amps: Vec<C64>) -> Result<Self> {
        let psi = Self::from_raw(n_sites, amps)?;
        let norm = psi.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "amplitudes have squared norm {norm}, expected 1"
            )));
        }
        Ok(Self {
            normalized: true,
            ..psi
        })
    }

    /// Wraps and normalizes arbitrary amplitudes.
    pub fn from_amplitudes_normalized(n_sites: usize, amps: Vec<C64>) -> Result<Self> {
        let mut psi = Self::from_raw(n_sites, amps)?;
        psi.normalize()?;
        Ok(psi)
    }

    /// Wraps amplitudes without any normalization requirement.
    pub fn from_raw(n_sites: usize, amps: Vec<C64>) -> Result<Self> {
        check_dense(n_sites)?;
        if amps.len() != 1usize << n_sites {
            return Err(Error::SizeMismatch {
                left: 1usize << n_sites,
                right: amps.len(),
            });
        }
        Ok(Self {
            n_sites,
            amps,
            normalized: false,
        })
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random_haar<R: Rng + ?Sized>(n_sites: usize, rng: &mut R) -> Result<Self> {
        check_dense(n_sites)?;
        let amps = (0..1usize << n_sites)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::from_amplitudes_normalized(n_sites, amps)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// False for results of non-unitary maps (`H|ψ>`, projections).
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub(crate) fn mark_normalized(&mut self, normalized: bool) {
        self.normalized = normalized;
    }

    pub fn norm_sqr(&self) -> f64 {
        let a = &self.amps;
        det_sum(a.len(), |k| a[k].norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> Result<f64> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let inv = 1.0 / norm;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        self.normalized = true;
        Ok(norm)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_sites(self.n_sites, other.n_sites)?;
        let (a, b) = (&self.amps, &other.amps);
        Ok(det_sum(a.len(), |k| a[k].conj() * b[k]))
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        check_sites(self.n_sites, other.n_sites)?;
        let (a, b) = (&self.amps, &other.amps);
        Ok(det_sum(a.len(), |k| (a[k] - b[k]).norm_sqr()).sqrt())
    }

    /// `|<self|other>|`, insensitive to global phase.
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    /// `p|ψ>`: a signed permutation of the amplitudes.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<StateVector> {
        check_sites(self.n_sites, p.n_sites())?;
        let (x, _) = p.low_masks();
        let x = x as usize;
        let src = &self.amps;
        let f = |r: usize| {
            let s = r ^ x;
            I_POW[p.basis_phase(s as u64) as usize] * src[s]
        };
        let amps = if src.len() >= PAR_LEN {
            (0..src.len()).into_par_iter().map(f).collect()
        } else {
            (0..src.len()).map(f).collect()
        };
        Ok(StateVector { amps, ..self.clone_meta() })
    }

    fn clone_meta(&self) -> StateVector {
        StateVector {
            n_sites: self.n_sites,
            amps: Vec::new(),
            normalized: self.normalized,
        }
    }

    /// `<ψ|p|ψ>` (complex in general, real for Hermitian `p`).
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<C64> {
        check_sites(self.n_sites, p.n_sites())?;
        let (x, _) = p.low_masks();
        let x = x as usize;
        let a = &self.amps;
        Ok(det_sum(a.len(), |s| {
            a[s ^ x].conj() * I_POW[p.basis_phase(s as u64) as usize] * a[s]
        }))
    }

    /// `<ψ|op|ψ>` for a Hermitian Pauli sum.
    pub fn expectation(&self, op: &PauliSum) -> Result<f64> {
        check_sites(self.n_sites, op.n_sites())?;
        let mut total = C64::new(0.0, 0.0);
        for t in op.terms() {
            total += t.coefficient * self.pauli_expectation(&t.string)?;
        }
        if total.im.abs() > 1e-8 * total.re.abs().max(1.0) {
            return Err(Error::NonHermitian(total.im));
        }
        Ok(total.re)
    }

    /// Applies `exp(i angle σ^axis / 2)` on every site.
    pub fn apply_global_rotation(&self, axis: Axis, angle: f64) -> StateVector {
        let (c, s) = ((0.5 * angle).cos(), (0.5 * angle).sin());
        let mut out = self.clone();
        match axis {
            Axis::Z => {
                // exp(i θ σᶻ/2) is diagonal with phase exp(i θ m(s)).
                let n = self.n_sites;
                let f = |(k, a): (usize, &mut C64)| *a *= C64::from_polar(1.0, angle * magnetization(n, k));
                if out.amps.len() >= PAR_LEN {
                    out.amps.par_iter_mut().enumerate().for_each(f);
                } else {
                    out.amps.iter_mut().enumerate().for_each(f);
                }
            }
            Axis::X | Axis::Y => {
                let m = if axis == Axis::X {
                    [[C64::new(c, 0.0), C64::new(0.0, s)], [C64::new(0.0, s), C64::new(c, 0.0)]]
                } else {
                    [[C64::new(c, 0.0), C64::new(s, 0.0)], [C64::new(-s, 0.0), C64::new(c, 0.0)]]
                };
                for site in 0..self.n_sites {
                    out.apply_single_qubit(site, &m);
                }
            }
        }
        out
    }

    /// Imprints the signal `exp(-i φ S_z)`.
    pub fn apply_signal_phase(&self, phi: f64) -> StateVector {
        let mut out = self.clone();
        out.apply_signal_phase_in_place(phi);
        out
    }

    pub fn apply_signal_phase_in_place(&mut self, phi: f64) {
        let n = self.n_sites;
        // Only N+1 distinct phases occur.
        let phases: Vec<C64> = (0..=n)
            .map(|k| C64::from_polar(1.0, -phi * (0.5 * n as f64 - k as f64)))
            .collect();
        let f = |(s, a): (usize, &mut C64)| *a *= phases[s.count_ones() as usize];
        if self.amps.len() >= PAR_LEN {
            self.amps.par_iter_mut().enumerate().for_each(f);
        } else {
            self.amps.iter_mut().enumerate().for_each(f);
        }
    }

    /// Applies a 2×2 matrix `m[out][in]` to one site.
    pub fn apply_single_qubit(&mut self, site: usize, m: &[[C64; 2]; 2]) {
        assert!(site < self.n_sites, "site {site} out of range");
        let stride = 1usize << site;
        let kernel = |chunk: &mut [C64]| {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = m[0][0] * x0 + m[0][1] * x1;
                *a1 = m[1][0] * x0 + m[1][1] * x1;
            }
        };
        if self.amps.len() >= PAR_LEN {
            self.amps.par_chunks_mut(2 * stride).for_each(kernel);
        } else {
            self.amps.chunks_mut(2 * stride).for_each(kernel);
        }
    }

    /// Applies a 4×4 matrix `m[out][in]` to sites `(a, b)`; the local basis
    /// index is `bit_a + 2 bit_b`.
    pub fn apply_two_qubit(&mut self, a: usize, b: usize, m: &[[C64; 4]; 4]) {
        assert!(a < self.n_sites && b < self.n_sites && a != b, "invalid site pair ({a}, {b})");
        let (ba, bb) = (1usize << a, 1usize << b);
        let (lo, hi) = (a.min(b), a.max(b));
        let quarter = self.amps.len() >> 2;
        for k in 0..quarter {
            let base = insert_zero_bit(insert_zero_bit(k, lo), hi);
            let idx = [base, base | ba, base | bb, base | ba | bb];
            let x = idx.map(|i| self.amps[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amps[i] = m[r][0] * x[0] + m[r][1] * x[1] + m[r][2] * x[2] + m[r][3] * x[3];
            }
        }
    }

    /// `(<S_z>, <S_z^2>)`.
    pub fn sz_moments(&self) -> (f64, f64) {
        let n = self.n_sites;
        let a = &self.amps;
        let (m1, m2) = det_sum(a.len(), |s| {
            let p = a[s].norm_sqr();
            let m = magnetization(n, s);
            Pair(p * m, p * m * m)
        })
        .into();
        (m1, m2)
    }

    /// `<S_z^2> - <S_z>^2`.
    pub fn sz_variance(&self) -> f64 {
        let (m1, m2) = self.sz_moments();
        (m2 - m1 * m1).max(0.0)
    }

    /// Pure-state quantum Fisher information for the generator `S_z`:
    /// `4 (<S_z^2> - <S_z>^2)`.
    pub fn qfi_pure(&self) -> f64 {
        4.0 * self.sz_variance()
    }

    /// Writes the binary snapshot: 8-byte magic, `u32` version, `u32` site
    /// count, then little-endian `f64` `(re, im)` pairs.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&(self.n_sites as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..8] != SNAPSHOT_MAGIC {
            return Err(Error::Parse("not a state-vector snapshot".into()));
        }
        let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
        if version != SNAPSHOT_VERSION {
            return Err(Error::Parse(format!("unsupported snapshot version {version}")));
        }
        let n_sites = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
        check_dense(n_sites)?;
        let mut buf = vec![0u8; 16 << n_sites];
        r.read_exact(&mut buf)?;
        let amps = buf
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        let mut psi = Self::from_raw(n_sites, amps)?;
        psi.normalized = (psi.norm_sqr() - 1.0).abs() <= 1e-10;
        Ok(psi)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_snapshot(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_snapshot(BufReader::new(File::open(path)?))
    }
}

#[inline]
pub(crate) fn insert_zero_bit(k: usize, pos: usize) -> usize {
    let low = k & ((1 << pos) - 1);
    ((k >> pos) << (pos + 1)) | low
}

#[derive(Clone, Copy, Default)]
struct Pair(f64, f64);

impl std::iter::Sum for Pair {
    fn sum<I: Iterator<Item = Pair>>(iter: I) -> Self {
        iter.fold(Pair(0.0, 0.0), |a, b| Pair(a.0 + b.0, a.1 + b.1))
    }
}

impl From<Pair> for (f64, f64) {
    fn from(p: Pair) -> Self {
        (p.0, p.1)
    }
}

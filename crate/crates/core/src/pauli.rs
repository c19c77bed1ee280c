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

//! Bitmask representation of N-qubit Pauli operators.
//!
//! A [`PauliString`] stores one X bit and one Z bit per site together with a
//! global phase `i^phase_exp`. A site with both bits set is the Hermitian `Y`
//! (not `XZ`), so a string with `phase_exp == 0` is always Hermitian. Site `k`
//! lives in bit `k % 64` of word `k / 64`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_sites, Error, Result};

/// Single-site Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | 'i' | '_' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Spin axis used for rotations, butterfly operators and measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl From<Axis> for Pauli {
    fn from(axis: Axis) -> Self {
        match axis {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::Parse(format!("unknown axis {other:?}"))),
        }
    }
}

#[inline]
fn n_words(n_sites: usize) -> usize {
    n_sites.div_ceil(64)
}

/// N-site Pauli operator `i^phase_exp * P_0 ⊗ P_1 ⊗ ... ⊗ P_{N-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_sites: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Self {
        let w = n_words(n_sites);
        Self {
            n_sites,
            x: vec![0; w],
            z: vec![0; w],
            phase: 0,
        }
    }

    pub fn single(n_sites: usize, site: usize, pauli: Pauli) -> Self {
        let mut p = Self::identity(n_sites);
        p.set(site, pauli);
        p
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Self {
        let mut p = Self::identity(paulis.len());
        for (site, &q) in paulis.iter().enumerate() {
            p.set(site, q);
        }
        p
    }

    pub fn from_sites(n_sites: usize, sites: &[(usize, Pauli)]) -> Self {
        let mut p = Self::identity(n_sites);
        for &(site, q) in sites {
            p.set(site, q);
        }
        p
    }

    /// Builds a string from raw masks (at most 64 sites).
    pub fn from_masks(n_sites: usize, x_mask: u64, z_mask: u64, phase_exp: u8) -> Self {
        assert!(n_sites <= 64, "from_masks supports at most 64 sites");
        let keep = if n_sites == 64 {
            u64::MAX
        } else {
            (1u64 << n_sites) - 1
        };
        let mut p = Self::identity(n_sites);
        if !p.x.is_empty() {
            p.x[0] = x_mask & keep;
            p.z[0] = z_mask & keep;
        }
        p.phase = phase_exp & 3;
        p
    }

    /// X-type string `prod_{k in bits} X_k`, the expansion basis of `exp(i eps S_x)`.
    pub fn x_type(n_sites: usize, sites: impl IntoIterator<Item = usize>) -> Self {
        let mut p = Self::identity(n_sites);
        for s in sites {
            p.set(s, Pauli::X);
        }
        p
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Exponent `k` of the global phase `i^k`.
    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, phase_exp: u8) -> Self {
        self.phase = phase_exp & 3;
        self
    }

    pub(crate) fn add_phase(&mut self, k: u8) {
        self.phase = (self.phase + k) & 3;
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    /// `(x_mask, z_mask)` for strings of at most 64 sites.
    #[inline]
    pub fn low_masks(&self) -> (u64, u64) {
        debug_assert!(self.n_sites <= 64);
        match (self.x.first(), self.z.first()) {
            (Some(&x), Some(&z)) => (x, z),
            _ => (0, 0),
        }
    }

    #[inline]
    pub fn get(&self, site: usize) -> Pauli {
        debug_assert!(site < self.n_sites);
        let (w, b) = (site / 64, site % 64);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    #[inline]
    pub fn set(&mut self, site: usize, pauli: Pauli) {
        assert!(
            site < self.n_sites,
            "site {site} out of range for {} sites",
            self.n_sites
        );
        let (w, b) = (site / 64, site % 64);
        let (xb, zb) = pauli.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
    }

    /// True when every site carries the identity (the phase is ignored).
    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(self.z.iter()).all(|&w| w == 0)
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    /// Number of sites where the string acts non-trivially.
    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    /// Number of sites carrying X or Y, i.e. the number of bits flipped when
    /// the string acts on a computational basis state.
    pub fn flip_count(&self) -> usize {
        self.x.iter().map(|x| x.count_ones() as usize).sum()
    }

    pub fn y_count(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x & z).count_ones() as usize)
            .sum()
    }

    /// Sparse view: the non-identity sites in increasing order.
    pub fn support(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        self.x
            .iter()
            .zip(&self.z)
            .enumerate()
            .flat_map(|(w, (&x, &z))| {
                let mut bits = x | z;
                std::iter::from_fn(move || {
                    if bits == 0 {
                        return None;
                    }
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some((
                        w * 64 + b,
                        Pauli::from_bits((x >> b) & 1 == 1, (z >> b) & 1 == 1),
                    ))
                })
            })
    }

    /// Operator product `self · other` with exact phase.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        check_sites(self.n_sites, other.n_sites)?;
        let mut plus = 0u32;
        let mut minus = 0u32;
        let mut x = Vec::with_capacity(self.x.len());
        let mut z = Vec::with_capacity(self.z.len());
        for w in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[w], self.z[w], other.x[w], other.z[w]);
            let (px, py, pz) = (x1 & !z1, x1 & z1, !x1 & z1);
            let (qx, qy, qz) = (x2 & !z2, x2 & z2, !x2 & z2);
            // XY = iZ, YZ = iX, ZX = iY and the reversed products carry -i.
            plus += (px & qy).count_ones() + (py & qz).count_ones() + (pz & qx).count_ones();
            minus += (py & qx).count_ones() + (pz & qy).count_ones() + (px & qz).count_ones();
            x.push(x1 ^ x2);
            z.push(z1 ^ z2);
        }
        let phase = (self.phase as u32 + other.phase as u32 + plus + 3 * minus) & 3;
        Ok(PauliString {
            n_sites: self.n_sites,
            x,
            z,
            phase: phase as u8,
        })
    }

    /// True iff the two strings commute (even symplectic inner product).
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        check_sites(self.n_sites, other.n_sites)?;
        let parity: u32 = (0..self.x.len())
            .map(|w| {
                (self.x[w] & other.z[w]).count_ones() + (self.z[w] & other.x[w]).count_ones()
            })
            .sum();
        Ok(parity % 2 == 0)
    }

    pub fn inverse(&self) -> PauliString {
        let mut p = self.clone();
        p.phase = (4 - self.phase) & 3;
        p
    }

    /// Phase `i^k` picked up when the string acts on basis state `s`
    /// (at most 64 sites): `P|s> = i^k |s ^ x_mask>`.
    #[inline]
    pub fn basis_phase(&self, s: u64) -> u8 {
        let (x, z) = self.low_masks();
        let y = (x & z).count_ones();
        let sign = ((s & z).count_ones() & 1) * 2;
        ((self.phase as u32 + y + sign) & 3) as u8
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for site in 0..self.n_sites {
            write!(f, "{}", self.get(site).to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `[+|-|+i|-i]P_0P_1...`; a missing prefix means `+`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("+i") {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (0, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else {
            (0, s)
        };
        if body.is_empty() {
            return Err(Error::Parse(format!("empty Pauli string {s:?}")));
        }
        let paulis = body
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .filter(|_| c != 'i')
                    .ok_or_else(|| Error::Parse(format!("invalid Pauli character {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString::from_paulis(&paulis).with_phase(phase))
    }
}

/// Hermitian Pauli string with a real coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub string: PauliString,
    pub coefficient: f64,
}

impl PauliTerm {
    /// Phases on the string are folded into the coefficient sign; imaginary
    /// phases are rejected because they would make the term anti-Hermitian.
    pub fn new(string: PauliString, coefficient: f64) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite coefficient {coefficient}"
            )));
        }
        if !string.is_hermitian() {
            return Err(Error::InvalidParameter(format!(
                "term {string} is not Hermitian"
            )));
        }
        let sign = if string.phase_exp() == 2 { -1.0 } else { 1.0 };
        Ok(Self {
            string: string.with_phase(0),
            coefficient: sign * coefficient,
        })
    }
}

/// Hermitian operator `sum_k c_k P_k` on a fixed number of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_sites: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(n_sites: usize) -> Self {
        Self {
            n_sites,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(n_sites: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        for t in &terms {
            check_sites(n_sites, t.string.n_sites())?;
        }
        Ok(Self { n_sites, terms })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, string: PauliString, coefficient: f64) -> Result<()> {
        check_sites(self.n_sites, string.n_sites())?;
        self.terms.push(PauliTerm::new(string, coefficient)?);
        Ok(())
    }

    /// Adds `c * P_i Q_j` for a two-site term.
    pub fn push_pair(&mut self, i: usize, p: Pauli, j: usize, q: Pauli, c: f64) -> Result<()> {
        self.push(PauliString::from_sites(self.n_sites, &[(i, p), (j, q)]), c)
    }

    /// Collective spin `S_axis = (1/2) sum_i sigma^axis_i`.
    pub fn collective(n_sites: usize, axis: Axis) -> Self {
        let terms = (0..n_sites)
            .map(|i| PauliTerm {
                string: PauliString::single(n_sites, i, axis.into()),
                coefficient: 0.5,
            })
            .collect();
        Self { n_sites, terms }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n_sites: self.n_sites,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm {
                    string: t.string.clone(),
                    coefficient: t.coefficient * factor,
                })
                .collect(),
        }
    }

    /// Concatenates the terms of two sums (no merging of equal strings).
    pub fn plus(&self, other: &PauliSum) -> Result<Self> {
        check_sites(self.n_sites, other.n_sites)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            n_sites: self.n_sites,
            terms,
        })
    }

    /// Sum of squared coefficients on each unordered site pair of two-body terms.
    pub fn pair_strengths(&self) -> Vec<((usize, usize), f64)> {
        let mut acc: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        for t in &self.terms {
            let sites: Vec<usize> = t.string.support().map(|(s, _)| s).collect();
            if let [i, j] = sites[..] {
                *acc.entry((i, j)).or_insert(0.0) += t.coefficient * t.coefficient;
            }
        }
        acc.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_site_products() {
        // X·Z = -iY
        let r = ps("X").multiply(&ps("Z")).unwrap();
        assert_eq!(r.get(0), Pauli::Y);
        assert_eq!(r.phase_exp(), 3);
        // X·X = I
        let r = ps("X").multiply(&ps("X")).unwrap();
        assert!(r.is_identity());
        assert_eq!(r.phase_exp(), 0);
        // (X⊗Z)(Z⊗Z) = (-iY)⊗I
        let r = ps("XZ").multiply(&ps("ZZ")).unwrap();
        assert_eq!(r.to_string(), "-iYI");
    }

    #[test]
    fn size_mismatch_is_an_error() {
        assert!(matches!(
            ps("XX").multiply(&ps("X")),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(ps("XX").commutes(&ps("X")).is_err());
    }

    #[test]
    fn commutation_examples() {
        assert!(!ps("X").commutes(&ps("Z")).unwrap());
        assert!(ps("XI").commutes(&ps("IZ")).unwrap());
        assert!(ps("XX").commutes(&ps("ZZ")).unwrap());
    }

    #[test]
    fn weight_and_flips() {
        assert_eq!(PauliString::identity(8).weight(), 0);
        assert_eq!(ps("XYI").weight(), 2);
        assert_eq!(ps("ZZ").flip_count(), 0);
        assert_eq!(ps("XY").flip_count(), 2);
    }

    #[test]
    fn text_round_trip_examples() {
        for s in ["+XIZY", "-XX", "+iZ", "-iYYI"] {
            assert_eq!(ps(s).to_string(), s);
        }
        assert_eq!(ps("XZ").to_string(), "+XZ");
        assert!("".parse::<PauliString>().is_err());
        assert!("+XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn wide_strings_span_words() {
        let mut p = PauliString::identity(150);
        p.set(3, Pauli::X);
        p.set(70, Pauli::Y);
        p.set(149, Pauli::Z);
        assert_eq!(p.weight(), 3);
        assert_eq!(p.flip_count(), 2);
        let support: Vec<_> = p.support().collect();
        assert_eq!(support, vec![(3, Pauli::X), (70, Pauli::Y), (149, Pauli::Z)]);
        let q = PauliString::single(150, 70, Pauli::X);
        assert!(!p.commutes(&q).unwrap());
        let r = p.multiply(&q).unwrap();
        assert_eq!(r.get(70), Pauli::Z);
    }

    #[test]
    fn pauli_term_folds_sign() {
        let t = PauliTerm::new(ps("-XX"), 2.0).unwrap();
        assert_eq!(t.coefficient, -2.0);
        assert_eq!(t.string.phase_exp(), 0);
        assert!(PauliTerm::new(ps("+iXX"), 1.0).is_err());
        assert!(PauliTerm::new(ps("XX"), f64::NAN).is_err());
    }

    fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
        (
            proptest::collection::vec(0u8..4, n),
            0u8..4,
        )
            .prop_map(|(v, ph)| {
                let paulis: Vec<Pauli> = v
                    .into_iter()
                    .map(|k| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][k as usize])
                    .collect();
                PauliString::from_paulis(&paulis).with_phase(ph)
            })
    }

    proptest! {
        #[test]
        fn reversed_products_differ_by_commutator_phase((p, q) in (1usize..80).prop_flat_map(|n| (arb_string(n), arb_string(n)))) {
            let pq = p.multiply(&q).unwrap();
            let qp = q.multiply(&p).unwrap();
            let diff = (pq.phase_exp() + 4 - qp.phase_exp()) % 4;
            let commutes = p.commutes(&q).unwrap();
            prop_assert_eq!(diff, if commutes { 0 } else { 2 });
            prop_assert_eq!(pq.x_words(), qp.x_words());
        }

        #[test]
        fn inverse_gives_identity(p in (1usize..100).prop_flat_map(arb_string)) {
            let r = p.multiply(&p.inverse()).unwrap();
            prop_assert!(r.is_identity());
            prop_assert_eq!(r.phase_exp(), 0);
        }

        #[test]
        fn flips_bounded_by_weight(p in (1usize..100).prop_flat_map(arb_string)) {
            prop_assert!(p.flip_count() <= p.weight());
            prop_assert!(p.weight() <= p.n_sites());
        }

        #[test]
        fn text_form_round_trips(p in (1usize..40).prop_flat_map(arb_string)) {
            let back: PauliString = p.to_string().parse().unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn multiplication_is_associative((p, q, r) in (1usize..20).prop_flat_map(|n| (arb_string(n), arb_string(n), arb_string(n)))) {
            let a = p.multiply(&q).unwrap().multiply(&r).unwrap();
            let b = p.multiply(&q.multiply(&r).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

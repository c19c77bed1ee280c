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

//! Hamiltonian and circuit builders for the experimental platforms, and
//! random positional disorder.
//!
//! Spin-1/2 operators are `s = σ/2`; builders that are written in terms of
//! `s` fold the factors of `1/2` into the Pauli coefficients.

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DenseGate, GateCircuit};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::rng::{self, domain};
use crate::C64;

/// Dipolar coupling constant between NV/P1 electron spins, MHz·nm³.
pub const J0_MHZ_NM3: f64 = 52.0;
/// Carbon atoms per nm³ in diamond.
pub const DIAMOND_ATOMS_PER_NM3: f64 = 176.2;
/// Default minimum pair separation for random geometries, nm.
pub const DEFAULT_MIN_DISTANCE_NM: f64 = 0.5;
/// Version of the JSON model format written by [`SpinModel::to_json`].
pub const MODEL_FORMAT_VERSION: u32 = 1;

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;
const COINCIDENT_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    Chain,
    Square,
    CubicRandom,
    Abstract,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub positions: Vec<[f64; 3]>,
    pub dimension: u8,
    pub lattice_kind: LatticeKind,
    /// `(rows, cols)` for square lattices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<(usize, usize)>,
}

impl Geometry {
    /// Sites labelled `0..n` with no spatial meaning.
    pub fn abstract_sites(n: usize) -> Self {
        Self {
            positions: (0..n).map(|i| [i as f64, 0.0, 0.0]).collect(),
            dimension: 1,
            lattice_kind: LatticeKind::Abstract,
            grid: None,
        }
    }

    pub fn chain(n: usize, spacing: f64) -> Self {
        Self {
            positions: (0..n).map(|i| [i as f64 * spacing, 0.0, 0.0]).collect(),
            dimension: 1,
            lattice_kind: LatticeKind::Chain,
            grid: None,
        }
    }

    /// Unit-spaced grid; site `r * cols + c` sits at `(c, r, 0)`.
    pub fn square(rows: usize, cols: usize) -> Self {
        let mut positions = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                positions.push([c as f64, r as f64, 0.0]);
            }
        }
        Self {
            positions,
            dimension: 2,
            lattice_kind: LatticeKind::Square,
            grid: Some((rows, cols)),
        }
    }

    /// Arbitrary 3D positions.
    pub fn from_positions(positions: Vec<[f64; 3]>) -> Self {
        Self {
            positions,
            dimension: 3,
            lattice_kind: LatticeKind::CubicRandom,
            grid: None,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.positions.len()
    }

    pub fn displacement(&self, i: usize, j: usize) -> [f64; 3] {
        let (a, b) = (self.positions[i], self.positions[j]);
        [b[0] - a[0], b[1] - a[1], b[2] - a[2]]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let d = self.displacement(i, j);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    /// Distance from each site to its nearest neighbour.
    pub fn nearest_neighbor_distances(&self) -> Vec<f64> {
        let n = self.n_sites();
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| self.distance(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    fn distance_checked(&self, i: usize, j: usize) -> Result<f64> {
        let r = self.distance(i, j);
        if !(r > COINCIDENT_EPS) {
            return Err(Error::CoincidentSites(i, j));
        }
        Ok(r)
    }
}

/// Choice of dipolar angular factor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngularFactor {
    /// `1 - 3 (n^z)^2`.
    #[default]
    Dipolar,
    /// `1 - 3 n^z`, linear in the direction cosine.
    Linear,
}

impl AngularFactor {
    pub fn evaluate(self, nz: f64) -> f64 {
        match self {
            AngularFactor::Dipolar => 1.0 - 3.0 * nz * nz,
            AngularFactor::Linear => 1.0 - 3.0 * nz,
        }
    }

    /// Angular factor over `r³` for the pair `(i, j)`.
    fn coupling(self, g: &Geometry, i: usize, j: usize) -> Result<f64> {
        let r = g.distance_checked(i, j)?;
        let nz = g.displacement(i, j)[2] / r;
        Ok(self.evaluate(nz) / (r * r * r))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EngineeredSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl EngineeredSign {
    pub fn value(self) -> f64 {
        match self {
            EngineeredSign::Plus => 1.0,
            EngineeredSign::Minus => -1.0,
        }
    }
}

/// A Hamiltonian with the geometry and coupling metadata it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinModel {
    pub hamiltonian: PauliSum,
    pub geometry: Geometry,
    pub label: String,
    pub coupling_scale: f64,
    pub coupling_units: String,
    /// Seed of the random couplings or positions, if any.
    pub seed: Option<u64>,
}

impl SpinModel {
    pub fn n_sites(&self) -> usize {
        self.hamiltonian.n_sites()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from_model(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        file.into_model()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRecord {
    sites: Vec<usize>,
    axes: String,
    coefficient: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    label: String,
    n_sites: usize,
    coupling_scale: f64,
    coupling_units: String,
    seed: Option<u64>,
    geometry: Geometry,
    terms: Vec<TermRecord>,
}

impl ModelFile {
    fn from_model(m: &SpinModel) -> Self {
        let terms = m
            .hamiltonian
            .terms()
            .iter()
            .map(|t| {
                let (sites, axes) = t
                    .string
                    .support()
                    .map(|(i, p)| (i, p.to_char().to_ascii_lowercase()))
                    .unzip();
                TermRecord {
                    sites,
                    axes,
                    coefficient: t.coefficient,
                }
            })
            .collect();
        Self {
            version: MODEL_FORMAT_VERSION,
            label: m.label.clone(),
            n_sites: m.n_sites(),
            coupling_scale: m.coupling_scale,
            coupling_units: m.coupling_units.clone(),
            seed: m.seed,
            geometry: m.geometry.clone(),
            terms,
        }
    }

    fn into_model(self) -> Result<SpinModel> {
        if self.version != MODEL_FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                self.version
            )));
        }
        if self.geometry.n_sites() != self.n_sites {
            return Err(Error::SizeMismatch {
                left: self.n_sites,
                right: self.geometry.n_sites(),
            });
        }
        let mut h = PauliSum::new(self.n_sites);
        for t in self.terms {
            let axes: Vec<char> = t.axes.chars().collect();
            if axes.len() != t.sites.len() {
                return Err(Error::Parse(format!(
                    "term has {} sites but {} axes",
                    t.sites.len(),
                    axes.len()
                )));
            }
            let mut sites = Vec::with_capacity(axes.len());
            for (&i, &a) in t.sites.iter().zip(&axes) {
                if i >= self.n_sites {
                    return Err(Error::SiteOutOfRange {
                        site: i,
                        n_sites: self.n_sites,
                    });
                }
                let p = Pauli::from_char(a.to_ascii_uppercase())
                    .ok_or_else(|| Error::Parse(format!("unknown axis '{a}'")))?;
                sites.push((i, p));
            }
            h.push(PauliString::from_sites(self.n_sites, &sites), t.coefficient)?;
        }
        Ok(SpinModel {
            hamiltonian: h,
            geometry: self.geometry,
            label: self.label,
            coupling_scale: self.coupling_scale,
            coupling_units: self.coupling_units,
            seed: self.seed,
        })
    }
}

fn require_sites(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        return Err(Error::InvalidParameter(format!(
            "{what} needs at least {min} sites, got {n}"
        )));
    }
    Ok(())
}

const PAULI_AXES: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

/// Two-body couplings on every pair and every axis combination, each drawn
/// from a normal distribution with standard deviation `j / √n`.
pub fn build_all_to_all_gaussian(n: usize, j: f64, seed: u64) -> Result<SpinModel> {
    require_sites(n, 2, "all-to-all model")?;
    let mut rng = rng::stream(seed, domain::COUPLINGS, 0);
    let std = j / (n as f64).sqrt();
    let mut h = PauliSum::new(n);
    for a in 0..n {
        for b in a + 1..n {
            for p in PAULI_AXES {
                for q in PAULI_AXES {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    h.push_pair(a, p, b, q, std * g)?;
                }
            }
        }
    }
    Ok(SpinModel {
        hamiltonian: h,
        geometry: Geometry::abstract_sites(n),
        label: format!("all-to-all-gaussian(n={n})"),
        coupling_scale: j,
        coupling_units: "MHz".into(),
        seed: Some(seed),
    })
}

fn push_xy(h: &mut PauliSum, i: usize, k: usize, c: f64) -> Result<()> {
    h.push_pair(i, Pauli::X, k, Pauli::X, c)?;
    h.push_pair(i, Pauli::Y, k, Pauli::Y, c)
}

/// `-J Σ (a/r)³ (XX + YY)` with distances in the same units as `a`.
pub fn build_rydberg_xy(geometry: &Geometry, j: f64, a: f64) -> Result<SpinModel> {
    let n = geometry.n_sites();
    require_sites(n, 2, "Rydberg model")?;
    let mut h = PauliSum::new(n);
    for i in 0..n {
        for k in i + 1..n {
            let r = geometry.distance_checked(i, k)? / a;
            push_xy(&mut h, i, k, -j / (r * r * r))?;
        }
    }
    Ok(SpinModel {
        hamiltonian: h,
        geometry: geometry.clone(),
        label: format!("rydberg-xy(n={n})"),
        coupling_scale: j,
        coupling_units: "MHz".into(),
        seed: None,
    })
}

/// Rydberg XY model truncated to nearest neighbours, each bond with `-J`.
pub fn build_rydberg_xy_nearest(geometry: &Geometry, j: f64) -> Result<SpinModel> {
    let n = geometry.n_sites();
    require_sites(n, 2, "Rydberg model")?;
    let mut rmin = f64::INFINITY;
    for i in 0..n {
        for k in i + 1..n {
            rmin = rmin.min(geometry.distance_checked(i, k)?);
        }
    }
    let mut h = PauliSum::new(n);
    for i in 0..n {
        for k in i + 1..n {
            if geometry.distance(i, k) <= rmin * (1.0 + 1e-9) {
                push_xy(&mut h, i, k, -j)?;
            }
        }
    }
    Ok(SpinModel {
        hamiltonian: h,
        geometry: geometry.clone(),
        label: format!("rydberg-xy-nearest(n={n})"),
        coupling_scale: j,
        coupling_units: "MHz".into(),
        seed: None,
    })
}

/// Secular dipolar interaction among the P1 spins (every site except 0),
/// `J₀ A_ij (s^z s^z - (s^x s^x + s^y s^y)/2)` with `A_ij` the angular
/// factor over `r³`.
pub fn p1_p1_terms(geometry: &Geometry, j0: f64, angular: AngularFactor) -> Result<PauliSum> {
    let n = geometry.n_sites();
    let mut h = PauliSum::new(n);
    for i in 1..n {
        for k in i + 1..n {
            let c = j0 * angular.coupling(geometry, i, k)?;
            push_xy(&mut h, i, k, -c / 8.0)?;
            h.push_pair(i, Pauli::Z, k, Pauli::Z, c / 4.0)?;
        }
    }
    Ok(h)
}

/// NV-P1 part, `(J₀/2) Σ_i A_0i s^z_0 (p^x_i + p^y_i)`.
pub fn nv_p1_terms(geometry: &Geometry, j0: f64, angular: AngularFactor) -> Result<PauliSum> {
    let n = geometry.n_sites();
    let mut h = PauliSum::new(n);
    for i in 1..n {
        let c = j0 * angular.coupling(geometry, 0, i)? / 8.0;
        h.push_pair(0, Pauli::Z, i, Pauli::X, c)?;
        h.push_pair(0, Pauli::Z, i, Pauli::Y, c)?;
    }
    Ok(h)
}

/// Engineered hybrid Hamiltonian `±H_NV-P1 - H_P1-P1 / 2` with site 0 the NV.
pub fn build_hybrid_nv_p1(geometry: &Geometry, j0: f64, sign: EngineeredSign) -> Result<SpinModel> {
    build_hybrid_nv_p1_with(geometry, j0, sign, AngularFactor::default())
}

pub fn build_hybrid_nv_p1_with(
    geometry: &Geometry,
    j0: f64,
    sign: EngineeredSign,
    angular: AngularFactor,
) -> Result<SpinModel> {
    let n = geometry.n_sites();
    require_sites(n, 2, "hybrid NV-P1 model")?;
    let h = nv_p1_terms(geometry, j0, angular)?
        .scaled(sign.value())
        .plus(&p1_p1_terms(geometry, j0, angular)?.scaled(-0.5))?;
    let s = if sign == EngineeredSign::Plus { '+' } else { '-' };
    Ok(SpinModel {
        hamiltonian: h,
        geometry: geometry.clone(),
        label: format!("hybrid-nv-p1{s}(n={n})"),
        coupling_scale: j0,
        coupling_units: "MHz nm^3".into(),
        seed: None,
    })
}

/// `(4J₀/5) Σ A_ij (s^x s^x + s^y s^y - 2 s^z s^z)` over all pairs.
pub fn build_nv_ensemble(geometry: &Geometry, j0: f64) -> Result<SpinModel> {
    build_nv_ensemble_with(geometry, j0, AngularFactor::default())
}

pub fn build_nv_ensemble_with(geometry: &Geometry, j0: f64, angular: AngularFactor) -> Result<SpinModel> {
    let n = geometry.n_sites();
    require_sites(n, 2, "NV ensemble model")?;
    let mut h = PauliSum::new(n);
    for i in 0..n {
        for k in i + 1..n {
            let c = j0 * angular.coupling(geometry, i, k)? / 5.0;
            push_xy(&mut h, i, k, c)?;
            h.push_pair(i, Pauli::Z, k, Pauli::Z, -2.0 * c)?;
        }
    }
    Ok(SpinModel {
        hamiltonian: h,
        geometry: geometry.clone(),
        label: format!("nv-ensemble(n={n})"),
        coupling_scale: j0,
        coupling_units: "MHz nm^3".into(),
        seed: None,
    })
}

/// Tree-like cavity coupling: `(-1)^m d^s` when `d = 2^m`, else 0.
pub fn cavity_tree_coupling(d: usize, s: f64) -> f64 {
    if d == 0 || !d.is_power_of_two() {
        return 0.0;
    }
    let sign = if d.trailing_zeros() % 2 == 0 { 1.0 } else { -1.0 };
    sign * (d as f64).powf(s)
}

pub fn build_cavity_tree(n: usize, s: f64) -> Result<SpinModel> {
    require_sites(n, 2, "cavity model")?;
    let mut h = PauliSum::new(n);
    for i in 0..n {
        for k in i + 1..n {
            let c = cavity_tree_coupling(k - i, s);
            if c != 0.0 {
                push_xy(&mut h, i, k, c)?;
            }
        }
    }
    Ok(SpinModel {
        hamiltonian: h,
        geometry: Geometry::chain(n, 1.0),
        label: format!("cavity-tree(n={n},s={s})"),
        coupling_scale: 1.0,
        coupling_units: "MHz".into(),
        seed: None,
    })
}

/// Nearest-neighbour `J (XX + YY)` on a square grid.
pub fn build_sc_xy(grid: &Geometry, j: f64) -> Result<SpinModel> {
    let (rows, cols) = match (grid.lattice_kind, grid.grid) {
        (LatticeKind::Square, Some(rc)) => rc,
        _ => {
            return Err(Error::InvalidParameter(
                "superconducting XY model needs a square grid geometry".into(),
            ))
        }
    };
    if rows * cols != grid.n_sites() {
        return Err(Error::SizeMismatch {
            left: rows * cols,
            right: grid.n_sites(),
        });
    }
    let mut h = PauliSum::new(grid.n_sites());
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                push_xy(&mut h, i, i + 1, j)?;
            }
            if r + 1 < rows {
                push_xy(&mut h, i, i + cols, j)?;
            }
        }
    }
    Ok(SpinModel {
        hamiltonian: h,
        geometry: grid.clone(),
        label: format!("sc-xy({rows}x{cols})"),
        coupling_scale: j,
        coupling_units: "MHz".into(),
        seed: None,
    })
}

/// Sites of the checkerboard sublattice `(r + c)` odd.
pub fn odd_sublattice(grid: &Geometry) -> Vec<usize> {
    let (_, cols) = grid.grid.unwrap_or((1, grid.n_sites()));
    (0..grid.n_sites()).filter(|i| (i / cols + i % cols) % 2 == 1).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CircuitGate {
    /// `exp(i(π/4) σˣ_a σˣ_b)`.
    Entangler { a: usize, b: usize },
    /// `exp(iα σᶻ) exp(i(π/4) σʸ) exp(iβ σᶻ)`.
    Rotation { site: usize, alpha: f64, beta: f64 },
}

impl CircuitGate {
    pub fn to_dense(self) -> DenseGate {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            CircuitGate::Entangler { a, b } => {
                let mut m = [[C64::new(0.0, 0.0); 4]; 4];
                for k in 0..4 {
                    m[k][k] = C64::new(s, 0.0);
                    m[3 - k][k] = C64::new(0.0, s);
                }
                DenseGate::Two { a, b, m }
            }
            CircuitGate::Rotation { site, alpha, beta } => {
                // Rows are outputs; exp(iπ/4 σʸ) = [[s, s], [-s, s]].
                let za = [C64::from_polar(1.0, alpha), C64::from_polar(1.0, -alpha)];
                let zb = [C64::from_polar(1.0, beta), C64::from_polar(1.0, -beta)];
                let y = [[s, s], [-s, s]];
                let m = std::array::from_fn(|r| std::array::from_fn(|c| za[r] * y[r][c] * zb[c]));
                DenseGate::One { site, m }
            }
        }
    }
}

/// Random layered circuit of pairwise entanglers and single-site rotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n_sites: usize,
    pub depth: usize,
    pub seed: u64,
    /// Gates in application order, layer by layer.
    pub gates: Vec<CircuitGate>,
}

impl CircuitSpec {
    pub fn to_gate_circuit(&self) -> Result<GateCircuit> {
        let mut c = GateCircuit::new(self.n_sites);
        for g in &self.gates {
            c.push(g.to_dense())?;
        }
        Ok(c)
    }

    /// Entangler pairs of each layer.
    pub fn layer_pairs(&self) -> Vec<Vec<(usize, usize)>> {
        let per_layer = self.n_sites / 2 + self.n_sites;
        self.gates
            .chunks(per_layer)
            .map(|layer| {
                layer
                    .iter()
                    .filter_map(|g| match *g {
                        CircuitGate::Entangler { a, b } => Some((a, b)),
                        _ => None,
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn build_trapped_ion_circuit(n: usize, depth: usize, seed: u64) -> Result<CircuitSpec> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "trapped-ion circuit needs an even, nonzero number of sites, got {n}"
        )));
    }
    let mut rng = rng::stream(seed, domain::CIRCUIT, 0);
    let mut gates = Vec::with_capacity(depth * (n / 2 + n));
    let mut sites: Vec<usize> = (0..n).collect();
    for _ in 0..depth {
        sites.sort_unstable();
        sites.shuffle(&mut rng);
        for pair in sites.chunks(2) {
            gates.push(CircuitGate::Entangler {
                a: pair[0].min(pair[1]),
                b: pair[0].max(pair[1]),
            });
        }
        for site in 0..n {
            let alpha = rng.random_range(0.0..2.0 * PI);
            let beta = rng.random_range(0.0..2.0 * PI);
            gates.push(CircuitGate::Rotation { site, alpha, beta });
        }
    }
    Ok(CircuitSpec {
        n_sites: n,
        depth,
        seed,
        gates,
    })
}

/// Spin density (nm⁻³) of a defect concentration in ppm of diamond atoms.
pub fn density_from_ppm(ppm: f64) -> f64 {
    ppm * 1e-6 * DIAMOND_ATOMS_PER_NM3
}

/// `n^{-1/3}` in nm for a concentration in ppm.
pub fn mean_separation_nm(ppm: f64) -> f64 {
    density_from_ppm(ppm).powf(-1.0 / 3.0)
}

/// Uniform positions in a cube of volume `n / density`, with the default
/// minimum separation.
pub fn sample_positions_3d(n: usize, density_ppm: f64, seed: u64) -> Result<Geometry> {
    sample_positions_3d_with(n, density_ppm, seed, DEFAULT_MIN_DISTANCE_NM)
}

pub fn sample_positions_3d_with(n: usize, density_ppm: f64, seed: u64, min_distance: f64) -> Result<Geometry> {
    if !(density_ppm > 0.0 && density_ppm.is_finite()) {
        return Err(Error::InvalidParameter(format!("density {density_ppm} ppm must be positive")));
    }
    let side = (n as f64 / density_from_ppm(density_ppm)).cbrt();
    let mut rng = rng::stream(seed, domain::POSITIONS, 0);
    let mut positions: Vec<[f64; 3]> = Vec::with_capacity(n);
    let mut attempts = 0;
    while positions.len() < n {
        let p: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..side));
        let ok = positions.iter().all(|q| {
            let d2: f64 = (0..3).map(|k| (p[k] - q[k]).powi(2)).sum();
            d2 >= min_distance * min_distance
        });
        attempts += 1;
        if ok {
            positions.push(p);
        } else if attempts >= MAX_PLACEMENT_ATTEMPTS * n.max(1) {
            return Err(Error::RejectionFailure(attempts));
        }
    }
    Ok(Geometry::from_positions(positions))
}

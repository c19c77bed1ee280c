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

//! Distribution of the total `S_z` and its characteristic function.

use serde::{Deserialize, Serialize};

use crate::error::{check_sites, Error, Result};
use crate::state::{det_sum, StateVector};
use crate::C64;

/// `P(S_z)` indexed by `k = N/2 - S_z`, i.e. by the number of flipped spins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationDistribution {
    n_sites: usize,
    probabilities: Vec<f64>,
}

impl PolarizationDistribution {
    pub fn new(n_sites: usize, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != n_sites + 1 {
            return Err(Error::SizeMismatch {
                left: n_sites + 1,
                right: probabilities.len(),
            });
        }
        if probabilities.iter().any(|&p| !(p >= -1e-15) || !p.is_finite()) {
            return Err(Error::InvalidParameter("negative or non-finite probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            n_sites,
            probabilities: probabilities.into_iter().map(|p| p.max(0.0)).collect(),
        })
    }

    /// Polarization statistics of a normalized state.
    pub fn from_state(psi: &StateVector) -> Self {
        let n = psi.n_sites();
        let a = psi.amplitudes();
        let probabilities = det_sum(a.len(), |s| Histogram::single(n, s.count_ones() as usize, a[s].norm_sqr())).0;
        Self {
            n_sites: n,
            probabilities,
        }
    }

    /// All weight on `k` flipped spins.
    pub fn delta(n_sites: usize, k: usize) -> Result<Self> {
        if k > n_sites {
            return Err(Error::InvalidParameter(format!("k = {k} exceeds {n_sites}")));
        }
        let mut probabilities = vec![0.0; n_sites + 1];
        probabilities[k] = 1.0;
        Ok(Self {
            n_sites,
            probabilities,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    #[inline]
    pub fn sz(&self, k: usize) -> f64 {
        0.5 * self.n_sites as f64 - k as f64
    }

    pub fn mean_sz(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(k, p)| p * self.sz(k)).sum()
    }

    pub fn variance_sz(&self) -> f64 {
        let m = self.mean_sz();
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| p * (self.sz(k) - m).powi(2))
            .sum()
    }

    /// `Φ(φ) = Σ exp(-i φ S_z) P(S_z)`.
    pub fn characteristic_function(&self, phi: f64) -> C64 {
        if phi == 0.0 {
            return C64::new(1.0, 0.0);
        }
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, &p)| C64::from_polar(p, -phi * self.sz(k)))
            .sum()
    }

    /// `Φ'(φ) = Σ (-i S_z) exp(-i φ S_z) P(S_z)`.
    pub fn characteristic_derivative(&self, phi: f64) -> C64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, &p)| C64::new(0.0, -self.sz(k)) * C64::from_polar(p, -phi * self.sz(k)))
            .sum()
    }

    /// `exp(i φ N/2) Φ(φ) = Σ_k exp(i φ k) P_k`, evaluated without the
    /// cancelling global phase.
    pub fn shifted_characteristic(&self, phi: f64) -> C64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, &p)| C64::from_polar(p, phi * k as f64))
            .sum()
    }

    /// Best slope over measurement quadratures,
    /// `|d/dφ [exp(i φ N/2) Φ(φ)]| = |i (N/2) Φ + Φ'| = |Σ_k k exp(i φ k) P_k|`.
    pub fn optimal_quadrature_sensitivity(&self, phi: f64) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, &p)| C64::from_polar(p * k as f64, phi * k as f64))
            .sum::<C64>()
            .norm()
    }

    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        check_sites(self.n_sites, other.n_sites)?;
        Ok(0.5
            * self
                .probabilities
                .iter()
                .zip(&other.probabilities)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

/// `P(S_z)` of a state.
pub fn polarization_distribution(psi: &StateVector) -> PolarizationDistribution {
    PolarizationDistribution::from_state(psi)
}

#[derive(Clone, Default)]
struct Histogram(Vec<f64>);

impl Histogram {
    fn single(n: usize, k: usize, p: f64) -> Self {
        let mut h = vec![0.0; n + 1];
        h[k] = p;
        Histogram(h)
    }
}

impl std::iter::Sum for Histogram {
    fn sum<I: Iterator<Item = Histogram>>(iter: I) -> Self {
        iter.fold(Histogram::default(), |mut acc, h| {
            if acc.0.is_empty() {
                return h;
            }
            acc.0.iter_mut().zip(&h.0).for_each(|(a, b)| *a += b);
            acc
        })
    }
}

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

//! Haar-random unitaries stored in factored Householder form.
//!
//! Column `k` of a complex Gaussian matrix, after the first `k` Householder
//! reflections of a QR factorization, is again an iid Gaussian vector on the
//! last `d - k` coordinates. Drawing those vectors directly gives
//! `U = H_0 H_1 ... H_{d-1} Λ` with `Λ_kk = R_kk / |R_kk|`, the phase-fixed
//! Q factor, without ever forming the matrix. Applying `U` or `U†` costs
//! `O(d²)` and storage is about `d²/2` amplitudes.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;
use crate::state::{check_dense, StateVector};
use crate::C64;

pub const MAX_HAAR_SITES: usize = 12;

#[derive(Clone, Debug)]
pub struct HaarUnitary {
    n_sites: usize,
    /// Unit Householder vectors; `reflectors[k]` acts on coordinates `k..d`.
    reflectors: Vec<Vec<C64>>,
    lambda: Vec<C64>,
}

impl HaarUnitary {
    pub fn sample<R: Rng + ?Sized>(n_sites: usize, rng: &mut R) -> Result<Self> {
        check_dense(n_sites)?;
        if n_sites > MAX_HAAR_SITES {
            return Err(Error::TooLarge {
                what: "Haar unitary",
                n: n_sites,
                limit: MAX_HAAR_SITES,
            });
        }
        let d = 1usize << n_sites;
        let mut reflectors = Vec::with_capacity(d);
        let mut lambda = Vec::with_capacity(d);
        for k in 0..d {
            let mut x: Vec<C64> = (0..d - k)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let r = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let phase = if x[0].norm() > 0.0 {
                x[0] / x[0].norm()
            } else {
                C64::new(1.0, 0.0)
            };
            // v = x - α e_1 with α = -phase·r; then H x = α e_1.
            x[0] += phase * r;
            let vn = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            x.iter_mut().for_each(|a| *a /= vn);
            reflectors.push(x);
            lambda.push(-phase);
        }
        Ok(Self {
            n_sites,
            reflectors,
            lambda,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn reflect(u: &[C64], y: &mut [C64]) {
        let proj: C64 = u.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum();
        let f = 2.0 * proj;
        y.iter_mut().zip(u).for_each(|(y, u)| *y -= f * u);
    }

    /// `y <- U y`.
    pub fn apply_in_place(&self, y: &mut [C64]) {
        assert_eq!(y.len(), self.dim());
        y.iter_mut().zip(&self.lambda).for_each(|(y, l)| *y *= l);
        for (k, u) in self.reflectors.iter().enumerate().rev() {
            Self::reflect(u, &mut y[k..]);
        }
    }

    /// `y <- U† y`.
    pub fn apply_adjoint_in_place(&self, y: &mut [C64]) {
        assert_eq!(y.len(), self.dim());
        for (k, u) in self.reflectors.iter().enumerate() {
            Self::reflect(u, &mut y[k..]);
        }
        y.iter_mut().zip(&self.lambda).for_each(|(y, l)| *y *= l.conj());
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        crate::error::check_sites(self.n_sites, psi.n_sites())?;
        let mut out = psi.clone();
        self.apply_in_place(out.amplitudes_mut());
        Ok(out)
    }

    pub fn apply_adjoint(&self, psi: &StateVector) -> Result<StateVector> {
        crate::error::check_sites(self.n_sites, psi.n_sites())?;
        let mut out = psi.clone();
        self.apply_adjoint_in_place(out.amplitudes_mut());
        Ok(out)
    }

    /// Dense matrix, for tests and small oracles.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut col = vec![C64::new(0.0, 0.0); d];
        for j in 0..d {
            col.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
            col[j] = C64::new(1.0, 0.0);
            self.apply_in_place(&mut col);
            m.set_column(j, &nalgebra::DVector::from_column_slice(&col));
        }
        m
    }
}

/// Haar unitary drawn from the stream `(seed, HAAR_UNITARY, 0)`.
pub fn sample_haar_unitary(n_sites: usize, seed: u64) -> Result<HaarUnitary> {
    HaarUnitary::sample(n_sites, &mut rng::stream(seed, rng::domain::HAAR_UNITARY, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitarity() {
        let u = sample_haar_unitary(6, 1).unwrap().to_dense();
        let dev = (u.adjoint() * &u - DMatrix::identity(64, 64)).norm();
        assert!(dev < 1e-10, "{dev}");
        for c in u.column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn adjoint_inverts() {
        let u = sample_haar_unitary(5, 2).unwrap();
        let psi = crate::state::tests::random_state(5, 3);
        let back = u.apply_adjoint(&u.apply(&psi).unwrap()).unwrap();
        assert!(back.distance(&psi).unwrap() < 1e-12);
        let dense = u.to_dense();
        let v = dense.adjoint() * nalgebra::DVector::from_column_slice(psi.amplitudes());
        let w = u.apply_adjoint(&psi).unwrap();
        let err = v.iter().zip(w.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn too_large() {
        assert!(matches!(
            sample_haar_unitary(MAX_HAAR_SITES + 1, 0),
            Err(Error::TooLarge { .. })
        ));
    }

    fn moments(values: &[f64]) -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn return_amplitude_matches_haar_moment() {
        let n = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let samples: Vec<f64> = (0..200)
            .map(|_| {
                let u = HaarUnitary::sample(n, &mut rng).unwrap();
                let mut e = vec![C64::new(0.0, 0.0); 16];
                e[0] = C64::new(1.0, 0.0);
                u.apply_in_place(&mut e);
                e[0].norm_sqr()
            })
            .collect();
        let (mean, se) = moments(&samples);
        assert!((mean - 1.0 / 16.0).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn left_invariance() {
        // For Haar U and any fixed W, |(WU)_00|^2 has mean 1/d and second
        // moment 2/(d(d+1)).
        let d = 4.0;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = HaarUnitary::sample(2, &mut rng).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for _ in 0..4000 {
            let u = HaarUnitary::sample(2, &mut rng).unwrap();
            let mut e = vec![C64::new(0.0, 0.0); 4];
            e[0] = C64::new(1.0, 0.0);
            u.apply_in_place(&mut e);
            a.push(e[0].norm_sqr());
            w.apply_in_place(&mut e);
            b.push(e[0].norm_sqr());
        }
        for s in [&a, &b] {
            let (m1, se1) = moments(s);
            assert!((m1 - 1.0 / d).abs() < 3.0 * se1);
            let sq: Vec<f64> = s.iter().map(|x| x * x).collect();
            let (m2, se2) = moments(&sq);
            assert!((m2 - 2.0 / (d * (d + 1.0))).abs() < 3.0 * se2);
        }
    }
}

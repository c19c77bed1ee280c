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

//! Lanczos propagator for `exp(-i H t)|ψ>` with adaptive substeps.
//!
//! Each substep builds an orthonormal Krylov basis (full
//! reorthogonalization), diagonalizes the tridiagonal projection and picks
//! the largest step `τ` whose a-posteriori error estimate
//! `β_m |[exp(-iτT)]_{m,1}|` stays below `tolerance · τ / |t|`. The basis is
//! reused for that step only.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_sites, Error, Result};
use crate::operator::CompiledOperator;
use crate::pauli::PauliSum;
use crate::state::{det_sum, StateVector, PAR_LEN};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionParams {
    /// Evolution time in µs when energies are in MHz.
    pub time: f64,
    pub krylov_dim: usize,
    /// Bound on the 2-norm error of the propagated state.
    pub tolerance: f64,
    pub max_substeps: usize,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self {
            time: 0.0,
            krylov_dim: 30,
            tolerance: 1e-8,
            max_substeps: 100_000,
        }
    }
}

impl EvolutionParams {
    pub fn new(time: f64) -> Self {
        Self {
            time,
            ..Self::default()
        }
    }

    pub fn with_time(self, time: f64) -> Self {
        Self { time, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.time.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite time {}", self.time)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.krylov_dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "krylov_dim must be at least 2, got {}",
                self.krylov_dim
            )));
        }
        if self.max_substeps == 0 {
            return Err(Error::InvalidParameter("max_substeps must be positive".into()));
        }
        Ok(())
    }
}

/// `exp(-i H t)|ψ>`.
pub fn evolve(h: &PauliSum, params: &EvolutionParams, psi: &StateVector) -> Result<StateVector> {
    check_sites(h.n_sites(), psi.n_sites())?;
    evolve_compiled(&CompiledOperator::new(h)?, params, psi)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    det_sum(a.len(), |k| a[k].conj() * b[k])
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    if y.len() >= PAR_LEN {
        y.par_iter_mut().zip(x.par_iter()).for_each(|(y, x)| *y += alpha * x);
    } else {
        y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
    }
}

fn scale(alpha: f64, y: &mut [C64]) {
    if y.len() >= PAR_LEN {
        y.par_iter_mut().for_each(|y| *y *= alpha);
    } else {
        y.iter_mut().for_each(|y| *y *= alpha);
    }
}

struct Projection {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    residual: f64,
}

impl Projection {
    /// `exp(-i s τ T) e_1` in the Krylov basis.
    fn coefficients(&self, signed_tau: f64) -> Vec<C64> {
        let m = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let w: Vec<C64> = (0..m)
            .map(|l| C64::from_polar(q[(0, l)], -self.eigenvalues[l] * signed_tau))
            .collect();
        (0..m)
            .map(|k| (0..m).map(|l| q[(k, l)] * w[l]).sum())
            .collect()
    }

    fn error(&self, signed_tau: f64) -> f64 {
        if self.residual == 0.0 {
            return 0.0;
        }
        let c = self.coefficients(signed_tau);
        self.residual * c[c.len() - 1].norm()
    }
}

/// Builds the Lanczos basis started at `v` (unit norm).
fn lanczos(op: &CompiledOperator, v: Vec<C64>, m_max: usize) -> (Vec<Vec<C64>>, Projection) {
    let dim = v.len();
    let mut basis = vec![v];
    let mut alpha = Vec::with_capacity(m_max);
    let mut beta: Vec<f64> = Vec::with_capacity(m_max);
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut residual = 0.0;
    for j in 0..m_max {
        op.apply_into(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        axpy(C64::new(-a, 0.0), &basis[j], &mut w);
        if j > 0 {
            axpy(C64::new(-beta[j - 1], 0.0), &basis[j - 1], &mut w);
        }
        for b in &basis {
            let c = dot(b, &w);
            axpy(-c, b, &mut w);
        }
        let norm = dot(&w, &w).re.sqrt();
        let scale_ref = a.abs() + beta.last().copied().unwrap_or(0.0) + 1e-300;
        if norm <= 1e-12 * scale_ref {
            // Invariant subspace: the projection is exact.
            residual = 0.0;
            break;
        }
        if j + 1 == m_max {
            residual = norm;
            break;
        }
        beta.push(norm);
        let mut next = std::mem::replace(&mut w, vec![C64::new(0.0, 0.0); dim]);
        scale(1.0 / norm, &mut next);
        basis.push(next);
    }
    let m = alpha.len();
    basis.truncate(m);
    let t = DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alpha[r]
        } else if r + 1 == c {
            beta[r]
        } else if c + 1 == r {
            beta[c]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    (
        basis,
        Projection {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
            residual,
        },
    )
}

/// `exp(-i H t)|ψ>` for an operator compiled once and reused.
pub fn evolve_compiled(
    op: &CompiledOperator,
    params: &EvolutionParams,
    psi: &StateVector,
) -> Result<StateVector> {
    check_sites(op.n_sites(), psi.n_sites())?;
    params.validate()?;
    let target = params.time;
    if target == 0.0 {
        return Ok(psi.clone());
    }
    let sign = target.signum();
    let total = target.abs();
    let mut v: Vec<C64> = psi.amplitudes().to_vec();
    let norm0 = dot(&v, &v).re.sqrt();
    if norm0 == 0.0 {
        return Ok(psi.clone());
    }
    let m_max = params.krylov_dim.min(v.len());
    let mut done = 0.0;
    let mut substeps = 0usize;
    while done < total {
        if substeps >= params.max_substeps {
            let (_, proj) = lanczos(op, normalized(&v, norm0), m_max);
            return Err(Error::KrylovNotConverged {
                residual: proj.error(sign * (total - done)),
                time_reached: sign * done,
                target,
            });
        }
        let (basis, proj) = lanczos(op, normalized(&v, norm0), m_max);
        let remaining = total - done;
        let budget = |tau: f64| params.tolerance * tau / total;
        let mut tau = remaining;
        if proj.error(sign * tau) > budget(tau) {
            let mut halvings = 0;
            while proj.error(sign * tau) > budget(tau) {
                tau *= 0.5;
                halvings += 1;
                if halvings > 200 {
                    return Err(Error::KrylovNotConverged {
                        residual: proj.error(sign * tau),
                        time_reached: sign * done,
                        target,
                    });
                }
            }
            // Bisect towards the largest admissible step in [tau, 2 tau].
            let (mut lo, mut hi) = (tau, (2.0 * tau).min(remaining));
            for _ in 0..8 {
                let mid = 0.5 * (lo + hi);
                if proj.error(sign * mid) <= budget(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            tau = lo;
        }
        let coeffs = proj.coefficients(sign * tau);
        v.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        for (c, b) in coeffs.iter().zip(&basis) {
            axpy(c * norm0, b, &mut v);
        }
        done = if remaining - tau <= 1e-14 * total { total } else { done + tau };
        substeps += 1;
    }
    let mut out = StateVector::from_raw(psi.n_sites(), v)?;
    out.mark_normalized(psi.is_normalized());
    Ok(out)
}

fn normalized(v: &[C64], norm: f64) -> Vec<C64> {
    v.iter().map(|a| a / norm).collect()
}

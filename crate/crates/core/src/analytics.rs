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

//! Closed-form reference curves for fully scrambling (Haar) dynamics.
//!
//! A Haar-scrambled `V(t)|0>` has a binomial polarization distribution,
//! whose characteristic function is `Φ(φ) = cos^N(φ/2)`. Everything below
//! follows from that and stays finite for `N` up to 10⁶.

use serde::Serialize;

use crate::polarization::PolarizationDistribution;

/// Below this size binomial coefficients are exact integers.
const EXACT_BINOMIAL_MAX: usize = 60;

/// Exact `C(n, k)` for `n ≤ 127`.
pub fn binomial_coefficients(n: usize) -> Vec<u128> {
    assert!(n <= 127, "exact binomials limited to n <= 127");
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    row
}

/// `P(k) = 2^{-N} C(N, k)`.
pub fn binomial_polarization(n: usize) -> PolarizationDistribution {
    assert!(n >= 1, "binomial distribution needs n >= 1");
    let probabilities: Vec<f64> = if n <= EXACT_BINOMIAL_MAX {
        let scale = 0.5f64.powi(n as i32);
        binomial_coefficients(n).into_iter().map(|c| c as f64 * scale).collect()
    } else {
        let ln_n = libm::lgamma(n as f64 + 1.0);
        let ln2n = n as f64 * std::f64::consts::LN_2;
        (0..=n)
            .map(|k| {
                (ln_n - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0) - ln2n)
                    .exp()
            })
            .collect()
    };
    // Renormalize the log-gamma path so the distribution validates exactly.
    let total: f64 = probabilities.iter().sum();
    PolarizationDistribution::new(n, probabilities.into_iter().map(|p| p / total).collect())
        .expect("binomial distribution is valid")
}

/// `cos^N(φ/2)` with the sign kept for odd `N`.
pub fn binomial_characteristic(n: usize, phi: f64) -> f64 {
    let c = (0.5 * phi).cos();
    if n <= i32::MAX as usize {
        c.powi(n as i32)
    } else {
        c.signum().powi((n % 2) as i32) * (n as f64 * c.abs().ln()).exp()
    }
}

/// `Im[exp(iφN/2) Φ(φ)] = sin(φN/2) cos^N(φ/2)`.
pub fn haar_local_signal(n: usize, phi: f64) -> f64 {
    (0.5 * phi * n as f64).sin() * binomial_characteristic(n, phi)
}

/// `Re[exp(iφN/2) Φ(φ)]`, the quadrature read out by the projection variant.
pub fn haar_projection_signal(n: usize, phi: f64) -> f64 {
    (0.5 * phi * n as f64).cos() * binomial_characteristic(n, phi)
}

/// Return probability of the double echo, `(1/4)|exp(-iφN/2) + Φ(φ)|²`.
pub fn haar_double_echo(n: usize, phi: f64) -> f64 {
    let phi_b = binomial_characteristic(n, phi);
    0.25 * (1.0 + phi_b * phi_b + 2.0 * (0.5 * phi * n as f64).cos() * phi_b)
}

/// Exact optimal-quadrature slope `(N/2) |cos(φ/2)|^{N-1}`.
pub fn haar_local_sensitivity(n: usize, phi: f64) -> f64 {
    let c = (0.5 * phi).cos().abs();
    0.5 * n as f64 * c.powf(n as f64 - 1.0)
}

/// Gaussian asymptote `(N/2) exp(-φ² N / 8)`.
pub fn haar_local_sensitivity_gaussian(n: usize, phi: f64) -> f64 {
    0.5 * n as f64 * (-phi * phi * n as f64 / 8.0).exp()
}

/// Rotation angle for a rescaled angle: `ε = 2 ε̄ / √N`.
pub fn epsilon_from_eps_bar(n: usize, eps_bar: f64) -> f64 {
    2.0 * eps_bar / (n as f64).sqrt()
}

pub fn eps_bar_from_epsilon(n: usize, epsilon: f64) -> f64 {
    0.5 * epsilon * (n as f64).sqrt()
}

/// `a = cos^N(ε/2)`, the amplitude of the unrotated component.
pub fn rotation_overlap(n: usize, epsilon: f64) -> f64 {
    binomial_characteristic(n, epsilon)
}

/// Large-`N` global sensitivity `ε̄ exp(-ε̄²) N`.
pub fn haar_global_sensitivity(n: usize, eps_bar: f64) -> f64 {
    eps_bar * (-eps_bar * eps_bar).exp() * n as f64
}

/// Finite-`N` global sensitivity at `φ = 0`, `N^{3/2} a² tan(ε/2)`, i.e. the
/// slope `(N²/2) a² tan(ε/2)` divided by the scrambled spread `√N/2`.
pub fn haar_global_sensitivity_finite(n: usize, epsilon: f64) -> f64 {
    let a = rotation_overlap(n, epsilon);
    (n as f64).powf(1.5) * a * a * (0.5 * epsilon).tan()
}

/// `ε̄ = 1/√2`, the maximizer of `ε̄ exp(-ε̄²)`.
pub fn optimal_eps_bar() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

/// Sensitivity of the `2 sin(ε S_x)` readout, `(a/√2) (1 - a⁴)^{1/2} N`.
pub fn haar_global_sin_sensitivity(n: usize, a: f64) -> f64 {
    a / std::f64::consts::SQRT_2 * (1.0 - a.powi(4)).max(0.0).sqrt() * n as f64
}

/// `a = 3^{-1/4}`, where `a⁴ = 1/3` maximizes the sin readout.
pub fn optimal_sin_overlap() -> f64 {
    3f64.powf(-0.25)
}

/// Rotation angle with `cos^N(ε/2) = a`.
pub fn epsilon_from_overlap(n: usize, a: f64) -> f64 {
    2.0 * a.powf(1.0 / n as f64).acos()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReferenceLimits {
    /// Standard quantum limit `η⁻¹ = √N`.
    pub sql_eta_inv: f64,
    /// Heisenberg limit `η⁻¹ = N`.
    pub heisenberg_eta_inv: f64,
    /// `ΔS_z` of the GHZ state.
    pub ghz_delta_sz: f64,
    /// Mean `S_z` variance of Haar-random states.
    pub haar_state_variance: f64,
}

pub fn reference_limits(n: usize) -> ReferenceLimits {
    let nf = n as f64;
    ReferenceLimits {
        sql_eta_inv: nf.sqrt(),
        heisenberg_eta_inv: nf,
        ghz_delta_sz: 0.5 * nf,
        haar_state_variance: 0.25 * nf,
    }
}

/// Metrological gain `G = η⁻² / N` over the standard quantum limit.
pub fn metrological_gain(eta_inv: f64, n: usize) -> f64 {
    eta_inv * eta_inv / n as f64
}

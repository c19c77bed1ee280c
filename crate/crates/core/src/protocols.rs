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

//! Local and global butterfly protocols on the dense engine.
//!
//! Local protocol: `|0> → U → exp(i(π/4)V) → U† → exp(-iφS_z) → U`, then
//! measure `V`. Global protocol: the local pulse is replaced by the collective
//! rotation `exp(iεS_x)` and the readout by `S_x` (or `2 sin(εS_x)`).
//!
//! The expensive parts that do not depend on `φ` are computed once by
//! [`LocalButterfly`] and [`GlobalButterfly`]; each further `φ` costs one
//! forward evolution.

use serde::{Deserialize, Serialize};

use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::pauli::{Axis, PauliString};
use crate::polarization::PolarizationDistribution;
use crate::state::{magnetization, StateVector};
use crate::C64;

pub use crate::polarization::polarization_distribution;

/// Step of the symmetric finite difference in `φ`.
pub const FD_STEP: f64 = 1e-4;
/// Relative disagreement between the `h` and `h/2` differences above which
/// a result carries a curvature warning.
pub const RICHARDSON_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalProtocolConfig {
    pub butterfly_site: usize,
    pub butterfly_axis: Axis,
    pub phi: f64,
}

impl LocalProtocolConfig {
    pub fn new(butterfly_site: usize, butterfly_axis: Axis, phi: f64) -> Self {
        Self {
            butterfly_site,
            butterfly_axis,
            phi,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlobalMeasurement {
    /// Collective `S_x`.
    Sx,
    /// `2 sin(ε S_x)`.
    SinEpsSx,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalProtocolConfig {
    pub epsilon: f64,
    pub phi: f64,
    pub measurement: GlobalMeasurement,
}

impl GlobalProtocolConfig {
    /// Configuration with `ε = 2 ε̄ / √N`.
    pub fn from_eps_bar(n_sites: usize, eps_bar: f64, phi: f64, measurement: GlobalMeasurement) -> Self {
        Self {
            epsilon: crate::analytics::epsilon_from_eps_bar(n_sites, eps_bar),
            phi,
            measurement,
        }
    }

    pub fn eps_bar(&self, n_sites: usize) -> f64 {
        crate::analytics::eps_bar_from_epsilon(n_sites, self.epsilon)
    }

    fn validate(&self) -> Result<()> {
        let pi = std::f64::consts::PI;
        if !(self.epsilon > -pi && self.epsilon <= pi) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} outside (-π, π]",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub signal: f64,
    pub d_signal_d_phi: f64,
    pub std_dev: f64,
    /// `|d_signal_d_phi| / std_dev`.
    pub eta_inv: f64,
    /// `2 <0|V(t) S_z V(t)|0> / N` for the local protocol.
    pub scrambled_polarization: Option<f64>,
    pub warning: Option<String>,
}

impl SensitivityResult {
    fn new(signal: f64, d: f64, std_dev: f64) -> Self {
        Self {
            signal,
            d_signal_d_phi: d,
            std_dev,
            eta_inv: if std_dev > 0.0 { d.abs() / std_dev } else { 0.0 },
            scrambled_polarization: None,
            warning: None,
        }
    }
}

/// Symmetric difference at `h` and `h/2`, Richardson-combined.
fn richardson<F: FnMut(f64) -> Result<f64>>(mut f: F, phi: f64, h: f64) -> Result<(f64, Option<String>)> {
    let d1 = (f(phi + h)? - f(phi - h)?) / (2.0 * h);
    let d2 = (f(phi + 0.5 * h)? - f(phi - 0.5 * h)?) / h;
    let d = (4.0 * d2 - d1) / 3.0;
    let spread = (d1 - d2).abs();
    let warning = (spread > RICHARDSON_TOLERANCE * d.abs().max(1.0)).then(|| {
        format!("finite-difference step {h} too large for the signal curvature (h vs h/2 differ by {spread:.3e})")
    });
    Ok((d, warning))
}

fn check_site(site: usize, n: usize) -> Result<()> {
    if site >= n {
        return Err(Error::SiteOutOfRange { site, n_sites: n });
    }
    Ok(())
}

/// `(1 + c V)|ψ>` for a Pauli `V`.
fn one_plus(psi: &StateVector, v: &PauliString, c: C64) -> Result<StateVector> {
    let vpsi = psi.apply_pauli(v)?;
    let amps = psi
        .amplitudes()
        .iter()
        .zip(vpsi.amplitudes())
        .map(|(a, b)| a + c * b)
        .collect();
    StateVector::from_raw(psi.n_sites(), amps)
}

fn scaled(mut psi: StateVector, factor: f64) -> Result<StateVector> {
    let amps: Vec<C64> = psi.amplitudes().iter().map(|a| a * factor).collect();
    psi = StateVector::from_raw(psi.n_sites(), amps)?;
    psi.mark_normalized(true);
    Ok(psi)
}

/// Outcome of the projection variant: the `+1` branch of `(1 + V)/2`
/// renormalized, with its probability tracked, and the `-1` branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectionOutcome {
    /// `<V>_φ` conditioned on the `+1` outcome.
    pub signal: f64,
    pub branch_weight: f64,
    /// `<V>_φ` conditioned on the `-1` outcome (0 when that branch is empty).
    pub minus_signal: f64,
    /// Weighted average over both branches.
    pub unconditioned: f64,
}

/// Precomputed local protocol for one dynamics and butterfly operator.
pub struct LocalButterfly<'a> {
    dynamics: &'a dyn Dynamics,
    v: PauliString,
    /// `U|0>`.
    evolved: StateVector,
    /// `U† exp(i(π/4)V) U |0>`.
    butterfly: StateVector,
    /// `V(t)|0> = U† V U |0>`.
    flipped: StateVector,
}

impl<'a> LocalButterfly<'a> {
    pub fn prepare(dynamics: &'a dyn Dynamics, butterfly_site: usize, axis: Axis) -> Result<Self> {
        let n = dynamics.n_sites();
        check_site(butterfly_site, n)?;
        let v = PauliString::single(n, butterfly_site, axis.into());
        let evolved = dynamics.forward(&StateVector::zero(n)?)?;
        let pulse = one_plus(&evolved, &v, C64::new(0.0, 1.0))?;
        let butterfly = dynamics.backward(&scaled(pulse, std::f64::consts::FRAC_1_SQRT_2)?)?;
        let flipped = dynamics.backward(&evolved.apply_pauli(&v)?)?;
        Ok(Self {
            dynamics,
            v,
            evolved,
            butterfly,
            flipped,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.v.n_sites()
    }

    pub fn butterfly_operator(&self) -> &PauliString {
        &self.v
    }

    /// The butterfly state pulled back to the initial frame,
    /// `U† exp(i(π/4)V) U |0>`.
    pub fn butterfly_state(&self) -> &StateVector {
        &self.butterfly
    }

    /// `<V>_φ`.
    pub fn signal(&self, phi: f64) -> Result<f64> {
        let out = self.dynamics.forward(&self.butterfly.apply_signal_phase(phi))?;
        Ok(out.pauli_expectation(&self.v)?.re)
    }

    /// `<0|V(t) S_z V(t)|0>`.
    pub fn flipped_sz(&self) -> f64 {
        self.flipped.sz_moments().0
    }

    /// `N/2 - <0|V(t) S_z V(t)|0>`.
    pub fn closed_form_eta_inv(&self) -> f64 {
        0.5 * self.n_sites() as f64 - self.flipped_sz()
    }

    /// `2 <0|V(t) S_z V(t)|0> / N`.
    pub fn scrambled_polarization(&self) -> f64 {
        2.0 * self.flipped_sz() / self.n_sites() as f64
    }

    /// Polarization distribution of `V(t)|0>`, whose characteristic function
    /// shapes the signal.
    pub fn flipped_distribution(&self) -> PolarizationDistribution {
        PolarizationDistribution::from_state(&self.flipped)
    }

    /// `<0|V(t)|0>`.
    pub fn static_expectation(&self) -> Result<f64> {
        Ok(self.evolved.pauli_expectation(&self.v)?.re)
    }

    /// Sensitivity at `φ`. At `φ = 0` the slope is the closed form
    /// `-(N/2 - <V(t) S_z V(t)>)`; elsewhere a Richardson-checked finite
    /// difference with step `h`.
    pub fn sensitivity(&self, phi: f64, h: f64) -> Result<SensitivityResult> {
        let (signal, d, warning) = if phi == 0.0 {
            (self.static_expectation()?, -self.closed_form_eta_inv(), None)
        } else {
            let (d, w) = richardson(|p| self.signal(p), phi, h)?;
            (self.signal(phi)?, d, w)
        };
        let std_dev = (1.0 - signal * signal).max(0.0).sqrt();
        let mut r = SensitivityResult::new(signal, d, std_dev);
        r.scrambled_polarization = Some(self.scrambled_polarization());
        r.warning = warning;
        Ok(r)
    }

    /// `(1/2) Σ_i (1 - <0|σᶻ_i V(t) σᶻ_i V(t)|0>)`, one correlator per site,
    /// each with its own application of `V(t)`.
    pub fn otoc_sensitivity(&self) -> Result<f64> {
        let n = self.n_sites();
        let zero = StateVector::zero(n)?;
        let mut total = 0.0;
        for i in 0..n {
            let z = PauliString::single(n, i, crate::pauli::Pauli::Z);
            let b = self.flipped.apply_pauli(&z)?;
            let c = self.dynamics.backward(&self.dynamics.forward(&b)?.apply_pauli(&self.v)?)?;
            let bra = zero.apply_pauli(&z)?;
            total += 1.0 - bra.inner(&c)?.re;
        }
        Ok(0.5 * total)
    }

    /// Projection variant: `(1 ± V)/2` in place of the pulse.
    pub fn projection(&self, phi: f64) -> Result<ProjectionOutcome> {
        let mut results = [(0.0, 0.0); 2];
        for (slot, sign) in [(0usize, 1.0), (1, -1.0)] {
            let branch = one_plus(&self.evolved, &self.v, C64::new(sign, 0.0))?;
            let mut branch = scaled(branch, 0.5)?;
            let weight = branch.norm_sqr();
            if weight < 1e-14 {
                if slot == 0 {
                    return Err(Error::ZeroNorm);
                }
                continue;
            }
            branch.normalize()?;
            let back = self.dynamics.backward(&branch)?;
            let out = self.dynamics.forward(&back.apply_signal_phase(phi))?;
            results[slot] = (out.pauli_expectation(&self.v)?.re, weight);
        }
        let [(signal, branch_weight), (minus_signal, minus_weight)] = results;
        Ok(ProjectionOutcome {
            signal,
            branch_weight,
            minus_signal,
            unconditioned: branch_weight * signal + minus_weight * minus_signal,
        })
    }

    /// State after preparation, signal and exact inverse preparation.
    pub fn double_echo_state(&self, phi: f64) -> Result<StateVector> {
        let fwd = self.dynamics.forward(&self.butterfly.apply_signal_phase(phi))?;
        let unpulse = scaled(one_plus(&fwd, &self.v, C64::new(0.0, -1.0))?, std::f64::consts::FRAC_1_SQRT_2)?;
        self.dynamics.backward(&unpulse)
    }

    /// `|<0|final>|²` of the double echo.
    pub fn double_echo(&self, phi: f64) -> Result<f64> {
        Ok(self.double_echo_state(phi)?.amplitudes()[0].norm_sqr())
    }
}

/// `H^{⊗N} |ψ>`: basis state `s` of the result is the `S_x` eigenstate with
/// eigenvalue `N/2 - popcount(s)`.
fn to_x_basis(psi: &StateVector) -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = [[C64::new(s, 0.0), C64::new(s, 0.0)], [C64::new(s, 0.0), C64::new(-s, 0.0)]];
    let mut rotated = psi.clone();
    for site in 0..psi.n_sites() {
        rotated.apply_single_qubit(site, &h);
    }
    rotated
}

/// Polarization statistics in the `x` basis (`k` = number of `-` outcomes).
fn x_basis_distribution(psi: &StateVector) -> PolarizationDistribution {
    PolarizationDistribution::from_state(&to_x_basis(psi))
}

/// `S_z |ψ>`, unnormalized.
fn apply_sz(psi: &StateVector) -> Result<StateVector> {
    let n = psi.n_sites();
    let amps = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(s, a)| a * magnetization(n, s))
        .collect();
    StateVector::from_raw(n, amps)
}

/// Mean and standard deviation of a readout diagonal in the `x` basis.
fn readout_moments(dist: &PolarizationDistribution, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut m1, mut m2) = (0.0, 0.0);
    for (k, p) in dist.probabilities().iter().enumerate() {
        let v = f(dist.sz(k));
        m1 += p * v;
        m2 += p * v * v;
    }
    (m1, (m2 - m1 * m1).max(0.0).sqrt())
}

/// Precomputed global protocol for one dynamics and rotation angle.
pub struct GlobalButterfly<'a> {
    dynamics: &'a dyn Dynamics,
    epsilon: f64,
    /// `U† exp(iεS_x) U |0>`.
    butterfly: StateVector,
}

impl<'a> GlobalButterfly<'a> {
    pub fn prepare(dynamics: &'a dyn Dynamics, epsilon: f64) -> Result<Self> {
        let evolved = dynamics.forward(&StateVector::zero(dynamics.n_sites())?)?;
        Self::from_evolved(dynamics, &evolved, epsilon)
    }

    /// Reuses `U|0>` across several angles.
    pub fn from_evolved(dynamics: &'a dyn Dynamics, evolved: &StateVector, epsilon: f64) -> Result<Self> {
        GlobalProtocolConfig {
            epsilon,
            phi: 0.0,
            measurement: GlobalMeasurement::Sx,
        }
        .validate()?;
        let rotated = evolved.apply_global_rotation(Axis::X, epsilon);
        Ok(Self {
            dynamics,
            epsilon,
            butterfly: dynamics.backward(&rotated)?,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn final_state(&self, phi: f64) -> Result<StateVector> {
        self.dynamics.forward(&self.butterfly.apply_signal_phase(phi))
    }

    fn readout(&self, phi: f64, m: GlobalMeasurement) -> Result<(f64, f64)> {
        let dist = x_basis_distribution(&self.final_state(phi)?);
        Ok(readout_moments(&dist, self.readout_function(m)))
    }

    /// `<M>_φ`.
    pub fn signal(&self, phi: f64, m: GlobalMeasurement) -> Result<f64> {
        Ok(self.readout(phi, m)?.0)
    }

    fn readout_function(&self, m: GlobalMeasurement) -> impl Fn(f64) -> f64 {
        let eps = self.epsilon;
        move |sx| match m {
            GlobalMeasurement::Sx => sx,
            GlobalMeasurement::SinEpsSx => 2.0 * (eps * sx).sin(),
        }
    }

    /// Exact slope `-2 Im <U S_z ψ_φ| M U ψ_φ>` with `ψ_φ = exp(-iφS_z) ψ_B`.
    pub fn slope(&self, phi: f64, m: GlobalMeasurement) -> Result<f64> {
        let psi = self.butterfly.apply_signal_phase(phi);
        let a = to_x_basis(&self.dynamics.forward(&apply_sz(&psi)?)?);
        let b = to_x_basis(&self.dynamics.forward(&psi)?);
        let n = psi.n_sites();
        let f = self.readout_function(m);
        let (a, b) = (a.amplitudes(), b.amplitudes());
        let im: f64 = crate::state::det_sum(a.len(), |s| (a[s].conj() * b[s]).im * f(magnetization(n, s)));
        Ok(-2.0 * im)
    }

    /// Sensitivity with the exact commutator slope.
    pub fn sensitivity(&self, phi: f64, m: GlobalMeasurement) -> Result<SensitivityResult> {
        let (signal, std_dev) = self.readout(phi, m)?;
        Ok(SensitivityResult::new(signal, self.slope(phi, m)?, std_dev))
    }

    /// Sensitivity with a Richardson-checked finite-difference slope.
    pub fn sensitivity_fd(&self, phi: f64, m: GlobalMeasurement, h: f64) -> Result<SensitivityResult> {
        let (signal, std_dev) = self.readout(phi, m)?;
        let (d, warning) = richardson(|p| self.signal(p, m), phi, h)?;
        let mut r = SensitivityResult::new(signal, d, std_dev);
        r.warning = warning;
        Ok(r)
    }

    /// `|<0|U† exp(-iεS_x) U exp(-iφS_z) ψ_B>|²`.
    pub fn double_echo(&self, phi: f64) -> Result<f64> {
        let fwd = self.final_state(phi)?;
        let back = self.dynamics.backward(&fwd.apply_global_rotation(Axis::X, -self.epsilon))?;
        Ok(back.amplitudes()[0].norm_sqr())
    }
}

pub fn local_signal(dynamics: &dyn Dynamics, cfg: &LocalProtocolConfig) -> Result<f64> {
    LocalButterfly::prepare(dynamics, cfg.butterfly_site, cfg.butterfly_axis)?.signal(cfg.phi)
}

pub fn local_sensitivity(dynamics: &dyn Dynamics, cfg: &LocalProtocolConfig) -> Result<SensitivityResult> {
    LocalButterfly::prepare(dynamics, cfg.butterfly_site, cfg.butterfly_axis)?.sensitivity(cfg.phi, FD_STEP)
}

pub fn otoc_sensitivity(dynamics: &dyn Dynamics, cfg: &LocalProtocolConfig) -> Result<f64> {
    LocalButterfly::prepare(dynamics, cfg.butterfly_site, cfg.butterfly_axis)?.otoc_sensitivity()
}

pub fn projection_quadrature_signal(dynamics: &dyn Dynamics, cfg: &LocalProtocolConfig) -> Result<ProjectionOutcome> {
    LocalButterfly::prepare(dynamics, cfg.butterfly_site, cfg.butterfly_axis)?.projection(cfg.phi)
}

pub fn local_double_echo_return_probability(dynamics: &dyn Dynamics, cfg: &LocalProtocolConfig) -> Result<f64> {
    LocalButterfly::prepare(dynamics, cfg.butterfly_site, cfg.butterfly_axis)?.double_echo(cfg.phi)
}

pub fn global_signal(dynamics: &dyn Dynamics, cfg: &GlobalProtocolConfig) -> Result<f64> {
    cfg.validate()?;
    GlobalButterfly::prepare(dynamics, cfg.epsilon)?.signal(cfg.phi, cfg.measurement)
}

pub fn global_sensitivity(dynamics: &dyn Dynamics, cfg: &GlobalProtocolConfig) -> Result<SensitivityResult> {
    cfg.validate()?;
    GlobalButterfly::prepare(dynamics, cfg.epsilon)?.sensitivity(cfg.phi, cfg.measurement)
}

/// Global sensitivity with the `2 sin(ε S_x)` readout.
pub fn global_sin_measurement_sensitivity(dynamics: &dyn Dynamics, cfg: &GlobalProtocolConfig) -> Result<SensitivityResult> {
    if cfg.measurement != GlobalMeasurement::SinEpsSx {
        return Err(Error::InvalidParameter("measurement must be sin-eps-sx".into()));
    }
    global_sensitivity(dynamics, cfg)
}

pub fn global_double_echo_return_probability(dynamics: &dyn Dynamics, cfg: &GlobalProtocolConfig) -> Result<f64> {
    cfg.validate()?;
    GlobalButterfly::prepare(dynamics, cfg.epsilon)?.double_echo(cfg.phi)
}

/// `Φ(φ)` of a polarization distribution.
pub fn characteristic_function(dist: &PolarizationDistribution, phi: f64) -> C64 {
    dist.characteristic_function(phi)
}

pub fn optimal_quadrature_sensitivity(dist: &PolarizationDistribution, phi: f64) -> f64 {
    dist.optimal_quadrature_sensitivity(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{HamiltonianEvolution, IdentityDynamics};
    use crate::haar::sample_haar_unitary;
    use crate::krylov::EvolutionParams;
    use crate::pauli::PauliSum;
    use crate::state::tests::random_string;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_h(n: usize, seed: u64) -> PauliSum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = PauliSum::new(n);
        for _ in 0..4 * n {
            h.push(random_string(n, &mut rng), rng.random_range(-1.0..1.0)).unwrap();
        }
        h
    }

    #[test]
    fn ramsey_limit() {
        let id = IdentityDynamics { n_sites: 1 };
        for phi in [-1.0, 0.0, 0.4, 2.0] {
            let s = local_signal(&id, &LocalProtocolConfig::new(0, Axis::X, phi)).unwrap();
            assert!((s.abs() - phi.sin().abs()).abs() < 1e-14);
        }
        let id = IdentityDynamics { n_sites: 5 };
        let r = local_sensitivity(&id, &LocalProtocolConfig::new(0, Axis::X, 0.0)).unwrap();
        assert_eq!(r.eta_inv, 1.0);
        assert_eq!(otoc_sensitivity(&id, &LocalProtocolConfig::new(0, Axis::X, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn finite_difference_agrees_with_closed_form_slope() {
        let h = random_h(5, 3);
        let d = HamiltonianEvolution::new(&h, EvolutionParams::new(1.3)).unwrap();
        let lb = LocalButterfly::prepare(&d, 2, Axis::Y).unwrap();
        let (fd, warn) = richardson(|p| lb.signal(p), 0.0, FD_STEP).unwrap();
        assert!(warn.is_none());
        assert!((fd + lb.closed_form_eta_inv()).abs() < 1e-7);
        let r = lb.sensitivity(0.3, FD_STEP).unwrap();
        assert!(r.warning.is_none());
        assert!(r.std_dev > 0.0);
        let coarse = lb.sensitivity(0.3, 0.5).unwrap();
        assert!(coarse.warning.is_some());
    }

    #[test]
    fn otoc_identity_for_small_systems() {
        for (n, seed) in [(3, 1u64), (5, 2), (6, 3)] {
            let u = sample_haar_unitary(n, seed).unwrap();
            let lb = LocalButterfly::prepare(&u, 0, Axis::X).unwrap();
            assert!((lb.otoc_sensitivity().unwrap() - lb.closed_form_eta_inv()).abs() < 1e-8);
            let h = random_h(n, seed);
            let d = HamiltonianEvolution::new(&h, EvolutionParams::new(2.0)).unwrap();
            let lb = LocalButterfly::prepare(&d, n - 1, Axis::Z).unwrap();
            assert!((lb.otoc_sensitivity().unwrap() - lb.closed_form_eta_inv()).abs() < 1e-8);
        }
    }

    #[test]
    fn projection_two_level() {
        // U = 1, N = 1, V = σˣ: the +1 branch is |+>, so <σˣ>_φ = cos φ.
        let id = IdentityDynamics { n_sites: 1 };
        for phi in [0.0, 0.3, 1.2] {
            let p = projection_quadrature_signal(&id, &LocalProtocolConfig::new(0, Axis::X, phi)).unwrap();
            assert!((p.signal - phi.cos()).abs() < 1e-14);
            assert!((p.branch_weight - 0.5).abs() < 1e-14);
            assert!((p.minus_signal + phi.cos()).abs() < 1e-14);
        }
        // V = σᶻ on |0>: the -1 branch is empty.
        let p = projection_quadrature_signal(&id, &LocalProtocolConfig::new(0, Axis::Z, 0.4)).unwrap();
        assert_eq!(p.branch_weight, 1.0);
        assert_eq!(p.signal, 1.0);
        // V = -σᶻ would empty the +1 branch; emulate with the flipped state.
        let lb = LocalButterfly {
            dynamics: &id,
            v: PauliString::single(1, 0, crate::pauli::Pauli::Z),
            evolved: StateVector::basis(1, 1).unwrap(),
            butterfly: StateVector::basis(1, 1).unwrap(),
            flipped: StateVector::basis(1, 1).unwrap(),
        };
        assert!(matches!(lb.projection(0.1), Err(Error::ZeroNorm)));
    }

    #[test]
    fn double_echo_two_level() {
        let id = IdentityDynamics { n_sites: 1 };
        for phi in [0.0, 0.5, 2.0] {
            let p = local_double_echo_return_probability(&id, &LocalProtocolConfig::new(0, Axis::X, phi)).unwrap();
            assert!((p - (phi / 2.0).cos().powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn double_echo_returns_at_zero_phase() {
        let u = sample_haar_unitary(6, 4).unwrap();
        let p = local_double_echo_return_probability(&u, &LocalProtocolConfig::new(3, Axis::Y, 0.0)).unwrap();
        assert!((p - 1.0).abs() < 1e-10);
        let g = GlobalProtocolConfig { epsilon: 0.4, phi: 0.0, measurement: GlobalMeasurement::Sx };
        assert!((global_double_echo_return_probability(&u, &g).unwrap() - 1.0).abs() < 1e-10);
    }

    /// Dense 4×4 oracle of the global circuit at t = 0, N = 2.
    #[test]
    fn global_two_site_oracle() {
        let eps = PI / 4.0;
        let id = IdentityDynamics { n_sites: 2 };
        let c = |re: f64, im: f64| C64::new(re, im);
        let rx = DMatrix::from_row_slice(2, 2, &[c((eps / 2.0).cos(), 0.0), c(0.0, (eps / 2.0).sin()), c(0.0, (eps / 2.0).sin()), c((eps / 2.0).cos(), 0.0)]);
        let r = rx.kronecker(&rx);
        let sx1 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        let i2 = DMatrix::<C64>::identity(2, 2);
        let sx = sx1.kronecker(&i2) + i2.kronecker(&sx1);
        for phi in [0.0, 0.2, 1.1] {
            let ph = DMatrix::from_diagonal(&DVector::from_fn(4, |s, _| {
                C64::from_polar(1.0, -phi * (1.0 - (s as u32).count_ones() as f64))
            }));
            let mut e0 = DVector::zeros(4);
            e0[0] = c(1.0, 0.0);
            let fin = &ph * &r * e0;
            let want = (fin.adjoint() * &sx * &fin)[(0, 0)].re;
            let cfg = GlobalProtocolConfig { epsilon: eps, phi, measurement: GlobalMeasurement::Sx };
            assert!((global_signal(&id, &cfg).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn global_sin_readout_matches_dense_oracle() {
        let n = 4;
        let u = sample_haar_unitary(n, 9).unwrap();
        let eps = 0.6;
        let phi = 0.15;
        let dense = u.to_dense();
        let dim = 1 << n;
        let sx = crate::operator::dense_matrix(&PauliSum::collective(n, Axis::X)).unwrap();
        let eig = sx.clone().symmetric_eigen();
        let func = |f: &dyn Fn(f64) -> C64| {
            &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| f(l))) * eig.eigenvectors.adjoint()
        };
        let rot = func(&|l| C64::from_polar(1.0, eps * l));
        let m = func(&|l| C64::new(2.0 * (eps * l).sin(), 0.0));
        let ph = DMatrix::from_diagonal(&DVector::from_fn(dim, |s, _| {
            C64::from_polar(1.0, -phi * (2.0 - (s as u32).count_ones() as f64))
        }));
        let mut e0 = DVector::zeros(dim);
        e0[0] = C64::new(1.0, 0.0);
        let fin = &dense * ph * dense.adjoint() * rot * &dense * e0;
        let want = (fin.adjoint() * &m * &fin)[(0, 0)].re;
        let cfg = GlobalProtocolConfig { epsilon: eps, phi, measurement: GlobalMeasurement::SinEpsSx };
        assert!((global_signal(&u, &cfg).unwrap() - want).abs() < 1e-12);
        assert!(global_sin_measurement_sensitivity(&u, &cfg).unwrap().std_dev > 0.0);
        let wrong = GlobalProtocolConfig { measurement: GlobalMeasurement::Sx, ..cfg };
        assert!(global_sin_measurement_sensitivity(&u, &wrong).is_err());
    }

    #[test]
    fn commutator_slope_matches_finite_difference() {
        let h = random_h(5, 8);
        let d = HamiltonianEvolution::new(&h, EvolutionParams::new(0.9)).unwrap();
        let gb = GlobalButterfly::prepare(&d, 0.5).unwrap();
        for m in [GlobalMeasurement::Sx, GlobalMeasurement::SinEpsSx] {
            for phi in [0.0, 0.37] {
                let exact = gb.sensitivity(phi, m).unwrap();
                let fd = gb.sensitivity_fd(phi, m, FD_STEP).unwrap();
                assert!((exact.d_signal_d_phi - fd.d_signal_d_phi).abs() < 1e-7);
                assert_eq!(exact.signal, fd.signal);
            }
        }
    }

    #[test]
    fn no_rotation_means_no_signal() {
        let u = sample_haar_unitary(5, 2).unwrap();
        let gb = GlobalButterfly::prepare(&u, 0.0).unwrap();
        let r = gb.sensitivity(0.0, GlobalMeasurement::Sx).unwrap();
        assert!(r.d_signal_d_phi.abs() < 1e-12);
        let r = gb.sensitivity(0.0, GlobalMeasurement::SinEpsSx).unwrap();
        assert_eq!(r.eta_inv, 0.0);
    }

    #[test]
    fn invalid_configs() {
        let id = IdentityDynamics { n_sites: 3 };
        assert!(local_signal(&id, &LocalProtocolConfig::new(3, Axis::X, 0.1)).is_err());
        let cfg = GlobalProtocolConfig { epsilon: 4.0, phi: 0.0, measurement: GlobalMeasurement::Sx };
        assert!(global_signal(&id, &cfg).is_err());
    }
}

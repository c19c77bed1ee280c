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

//! Error budgets for the butterfly protocols: linear readout and
//! initialization factors, space-time-volume suppression of evolution
//! errors, and a density-matrix oracle with depolarizing noise for small
//! systems.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::SpinModel;
use crate::operator::dense_matrix;
use crate::pauli::{Axis, Pauli, PauliString, PauliSum};
use crate::protocols::{GlobalMeasurement, GlobalProtocolConfig, LocalProtocolConfig, SensitivityResult};
use crate::state::{magnetization, I_POW};
use crate::stochastic::GrowthRecord;
use crate::C64;

/// Largest system the density-matrix oracle accepts.
pub const MAX_ORACLE_SITES: usize = 6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Depolarizing rate per site and unit time.
    #[serde(default)]
    pub gamma_evolution: f64,
    #[serde(default)]
    pub gamma_readout: f64,
    #[serde(default)]
    pub gamma_init: f64,
}

impl NoiseModel {
    pub fn evolution(gamma: f64) -> Self {
        Self {
            gamma_evolution: gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_evolution >= 0.0 && self.gamma_evolution.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma_evolution {} must be nonnegative",
                self.gamma_evolution
            )));
        }
        check_unit("gamma_readout", self.gamma_readout)?;
        check_unit("gamma_init", self.gamma_init)
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("{name} {v} outside [0, 1]")));
    }
    Ok(())
}

/// `(1 - γ_r) η⁻¹`.
pub fn readout_scaling(eta_inv: f64, gamma_r: f64) -> Result<f64> {
    check_unit("gamma_readout", gamma_r)?;
    Ok((1.0 - gamma_r) * eta_inv)
}

/// `(1 - γ_i) η⁻¹`.
pub fn init_scaling(eta_inv: f64, gamma_i: f64) -> Result<f64> {
    check_unit("gamma_init", gamma_i)?;
    Ok((1.0 - gamma_i) * eta_inv)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeSource {
    GrowthRecord,
    BallisticFormula,
    DenseOperator,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    /// Integral of operator size over time (site × time).
    pub volume: f64,
    pub source: VolumeSource,
}

/// Trapezoidal integral of sizes sampled every `dt`.
pub fn integrate_sizes(sizes: &[f64], dt: f64) -> f64 {
    sizes.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum()
}

pub fn spacetime_volume(record: &GrowthRecord, time_per_step: f64) -> Result<VolumeEstimate> {
    if record.mean_size.is_empty() {
        return Err(Error::InvalidParameter("empty growth record".into()));
    }
    Ok(VolumeEstimate {
        volume: integrate_sizes(&record.mean_size, time_per_step),
        source: VolumeSource::GrowthRecord,
    })
}

/// `∫_0^t (v_B t')^d dt' = (v_B t)^{d+1} / ((d+1) v_B)`.
pub fn ballistic_volume(v_b: f64, t: f64, d: u32) -> VolumeEstimate {
    VolumeEstimate {
        volume: (v_b * t).powi(d as i32 + 1) / ((d as f64 + 1.0) * v_b),
        source: VolumeSource::BallisticFormula,
    }
}

/// `exp(-2 γ Vol)`.
pub fn loschmidt_factor(gamma: f64, vol: &VolumeEstimate) -> f64 {
    (-2.0 * gamma * vol.volume).exp()
}

/// `(N/2) exp(-2γ Vol_z) exp(-2γ Vol_V)`.
pub fn noisy_sensitivity_bound(n: usize, gamma: f64, vol_v: &VolumeEstimate, vol_z_mean: &VolumeEstimate) -> f64 {
    0.5 * n as f64 * loschmidt_factor(gamma, vol_z_mean) * loschmidt_factor(gamma, vol_v)
}

/// `(N/2) exp(-(4/(d+1)) (γ/v_B) N^{(d+1)/d})`.
pub fn ballistic_bound(n: usize, gamma: f64, v_b: f64, d: u32) -> Result<f64> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidParameter(format!("dimension {d} outside 1..=3")));
    }
    if !(v_b > 0.0) {
        return Err(Error::InvalidParameter(format!("butterfly velocity {v_b} must be positive")));
    }
    let nf = n as f64;
    let df = d as f64;
    Ok(0.5 * nf * (-(4.0 / (df + 1.0)) * (gamma / v_b) * nf.powf((df + 1.0) / df)).exp())
}

type Mat = DMatrix<C64>;

fn check_oracle_size(n: usize) -> Result<()> {
    if n > MAX_ORACLE_SITES {
        return Err(Error::TooLarge {
            what: "density-matrix oracle",
            n,
            limit: MAX_ORACLE_SITES,
        });
    }
    Ok(())
}

/// `f(A)` for Hermitian `A` through its eigendecomposition.
fn hermitian_function(a: &Mat, f: impl Fn(f64) -> C64) -> Mat {
    let eig = a.clone().symmetric_eigen();
    let d = Mat::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

fn pauli_matrix(p: &PauliString) -> Result<Mat> {
    let mut s = PauliSum::new(p.n_sites());
    s.push(p.clone(), 1.0)?;
    dense_matrix(&s)
}

/// `ρ ↦ λ ρ + (1 - λ) Tr_site(ρ) ⊗ 1/2`: non-identity Pauli components on
/// `site` are multiplied by `λ`.
fn depolarize(rho: &mut Mat, site: usize, lambda: f64) {
    let bit = 1usize << site;
    let dim = rho.nrows();
    for r in 0..dim {
        for c in 0..dim {
            if r & bit != 0 || c & bit != 0 {
                continue;
            }
            let (a, b) = (rho[(r, c)], rho[(r | bit, c | bit)]);
            let avg = 0.5 * (a + b);
            rho[(r, c)] = lambda * a + (1.0 - lambda) * avg;
            rho[(r | bit, c | bit)] = lambda * b + (1.0 - lambda) * avg;
            rho[(r | bit, c)] *= lambda;
            rho[(r, c | bit)] *= lambda;
        }
    }
}

/// Strang-split noisy evolution: half a depolarizing layer, the exact step
/// unitary, the other half.
struct NoisyPropagator {
    n: usize,
    step: Mat,
    steps: usize,
    half_lambda: f64,
}

impl NoisyPropagator {
    fn new(h: &Mat, n: usize, time: f64, steps: usize, gamma: f64) -> Self {
        let dt = time / steps as f64;
        Self {
            n,
            step: hermitian_function(h, |e| C64::from_polar(1.0, -e * dt)),
            steps,
            half_lambda: (-0.5 * gamma * dt).exp(),
        }
    }

    fn layer(&self, rho: &mut Mat) {
        if self.half_lambda < 1.0 {
            for site in 0..self.n {
                depolarize(rho, site, self.half_lambda);
            }
        }
    }

    fn apply(&self, rho: &Mat, backward: bool) -> Mat {
        let u = if backward { self.step.adjoint() } else { self.step.clone() };
        let ud = u.adjoint();
        let mut out = rho.clone();
        for _ in 0..self.steps {
            self.layer(&mut out);
            out = &u * out * &ud;
            self.layer(&mut out);
        }
        out
    }
}

/// Product state with each site excited (`|1>`) with probability `q`.
fn thermal_product(n: usize, q: f64) -> Mat {
    let dim = 1 << n;
    Mat::from_diagonal(&nalgebra::DVector::from_fn(dim, |s, _| {
        let k = (s as u32).count_ones() as i32;
        C64::new(q.powi(k) * (1.0 - q).powi(n as i32 - k), 0.0)
    }))
}

fn phase_diagonal(n: usize, phi: f64) -> Vec<C64> {
    (0..1usize << n)
        .map(|s| C64::from_polar(1.0, -phi * magnetization(n, s)))
        .collect()
}

fn conjugate_diagonal(rho: &Mat, d: &[C64]) -> Mat {
    Mat::from_fn(rho.nrows(), rho.ncols(), |r, c| d[r] * rho[(r, c)] * d[c].conj())
}

fn sz_commutator(rho: &Mat, n: usize) -> Mat {
    // -i [S_z, ρ]
    Mat::from_fn(rho.nrows(), rho.ncols(), |r, c| {
        C64::new(0.0, -1.0) * (magnetization(n, r) - magnetization(n, c)) * rho[(r, c)]
    })
}

fn trace_product(a: &Mat, rho: &Mat) -> f64 {
    (a * rho).trace().re
}

/// `ρ ↦ (1 - q) ρ + q Q ρ Q` on each listed site.
fn readout_flips(rho: &Mat, flips: &[Mat], q: f64) -> Mat {
    let mut out = rho.clone();
    for f in flips {
        out = &out * C64::new(1.0 - q, 0.0) + f * &out * f * C64::new(q, 0.0);
    }
    out
}

/// Protocol selection for [`depolarizing_oracle`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OracleProtocol {
    Local(LocalProtocolConfig),
    Global(GlobalProtocolConfig),
}

/// Runs the local or global protocol on a density matrix with depolarizing
/// noise during every evolution segment, a noisy initial state and bit-flip
/// readout errors. Evolution is split into `steps` steps of length
/// `time / steps`.
pub fn depolarizing_oracle(
    model: &SpinModel,
    protocol: &OracleProtocol,
    noise: &NoiseModel,
    time: f64,
    steps: usize,
) -> Result<SensitivityResult> {
    let n = model.n_sites();
    check_oracle_size(n)?;
    noise.validate()?;
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    let h = dense_matrix(&model.hamiltonian)?;
    let prop = NoisyPropagator::new(&h, n, time, steps, noise.gamma_evolution);
    let rho0 = thermal_product(n, 0.5 * noise.gamma_init);
    let rho1 = prop.apply(&rho0, false);

    let (pulse, observable, flips, phi, local) = match *protocol {
        OracleProtocol::Local(cfg) => {
            if cfg.butterfly_site >= n {
                return Err(Error::SiteOutOfRange {
                    site: cfg.butterfly_site,
                    n_sites: n,
                });
            }
            let v = pauli_matrix(&PauliString::single(n, cfg.butterfly_site, cfg.butterfly_axis.into()))?;
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let pulse = (Mat::identity(1 << n, 1 << n) + &v * C64::new(0.0, 1.0)) * C64::new(s, 0.0);
            let flip_axis = if cfg.butterfly_axis == Axis::Z { Pauli::X } else { Pauli::Z };
            let flip = pauli_matrix(&PauliString::single(n, cfg.butterfly_site, flip_axis))?;
            (pulse, v, vec![flip], cfg.phi, true)
        }
        OracleProtocol::Global(cfg) => {
            let sx = dense_matrix(&PauliSum::collective(n, Axis::X))?;
            let pulse = hermitian_function(&sx, |e| C64::from_polar(1.0, cfg.epsilon * e));
            let observable = match cfg.measurement {
                GlobalMeasurement::Sx => sx,
                GlobalMeasurement::SinEpsSx => hermitian_function(&sx, |e| C64::new(2.0 * (cfg.epsilon * e).sin(), 0.0)),
            };
            let flips = (0..n)
                .map(|i| pauli_matrix(&PauliString::single(n, i, Pauli::Z)))
                .collect::<Result<Vec<_>>>()?;
            (pulse, observable, flips, cfg.phi, false)
        }
    };

    let rho2 = &pulse * rho1 * pulse.adjoint();
    let rho3 = prop.apply(&rho2, true);
    let rho4 = conjugate_diagonal(&rho3, &phase_diagonal(n, phi));
    let q = 0.5 * noise.gamma_readout;
    let rho5 = readout_flips(&prop.apply(&rho4, false), &flips, q);
    let drho5 = readout_flips(&prop.apply(&sz_commutator(&rho4, n), false), &flips, q);

    let signal = trace_product(&observable, &rho5);
    let d = trace_product(&observable, &drho5);
    let std_dev = if local {
        (1.0 - signal * signal).max(0.0).sqrt()
    } else {
        (trace_product(&(&observable * &observable), &rho5) - signal * signal).max(0.0).sqrt()
    };
    Ok(SensitivityResult {
        signal,
        d_signal_d_phi: d,
        std_dev,
        eta_inv: if std_dev > 0.0 { d.abs() / std_dev } else { 0.0 },
        scrambled_polarization: None,
        warning: None,
    })
}

/// Mean Pauli weight of an operator, `Σ_P |c_P|² |P| / Σ_P |c_P|²`, from its
/// full Pauli decomposition.
pub fn operator_size(o: &Mat, n: usize) -> f64 {
    let dim = 1usize << n;
    let (mut num, mut den) = (0.0, 0.0);
    for x in 0..dim as u64 {
        for z in 0..dim as u64 {
            let p = PauliString::from_masks(n, x, z, 0);
            // Tr(P O) = Σ_r <r ^ x| ... : P|r> = i^k |r ^ x>.
            let tr: C64 = (0..dim)
                .map(|r| I_POW[p.basis_phase(r as u64) as usize].conj() * o[(r ^ x as usize, r)].conj())
                .sum();
            let w = tr.norm_sqr();
            num += w * p.weight() as f64;
            den += w;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Size of `O(t) = e^{iHt} O e^{-iHt}` at each time (negative times evolve
/// backwards).
pub fn operator_size_curve(h: &PauliSum, op: &PauliString, times: &[f64]) -> Result<Vec<f64>> {
    let n = h.n_sites();
    check_oracle_size(n)?;
    let hm = dense_matrix(h)?;
    let om = pauli_matrix(op)?;
    let eig = hm.symmetric_eigen();
    let vd = eig.eigenvectors.adjoint();
    let o_eig = &vd * om * &eig.eigenvectors;
    Ok(times
        .iter()
        .map(|&t| {
            let ph: Vec<C64> = eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, e * t)).collect();
            let rotated = Mat::from_fn(o_eig.nrows(), o_eig.ncols(), |r, c| ph[r] * o_eig[(r, c)] * ph[c].conj());
            operator_size(&(&eig.eigenvectors * rotated * &vd), n)
        })
        .collect())
}

/// Clean-evolution volumes `Vol[V(0→t)]` and the site average of
/// `Vol[σᶻ_i(t→0)]`, on `samples + 1` equally spaced times.
pub fn dense_volumes(h: &PauliSum, v: &PauliString, time: f64, samples: usize) -> Result<(VolumeEstimate, VolumeEstimate)> {
    let n = h.n_sites();
    let dt = time / samples.max(1) as f64;
    let fwd: Vec<f64> = (0..=samples).map(|k| k as f64 * dt).collect();
    let bwd: Vec<f64> = fwd.iter().map(|t| -t).collect();
    let vol_v = integrate_sizes(&operator_size_curve(h, v, &fwd)?, dt);
    let mut vol_z = 0.0;
    for i in 0..n {
        vol_z += integrate_sizes(&operator_size_curve(h, &PauliString::single(n, i, Pauli::Z), &bwd)?, dt);
    }
    let est = |volume| VolumeEstimate {
        volume,
        source: VolumeSource::DenseOperator,
    };
    Ok((est(vol_v), est(vol_z / n as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::HamiltonianEvolution;
    use crate::haar::sample_haar_unitary;
    use crate::krylov::EvolutionParams;
    use crate::models::build_all_to_all_gaussian;
    use crate::protocols::{global_sensitivity, local_sensitivity};
    use crate::stochastic::GrowthRecord;

    #[test]
    fn linear_factors() {
        assert_eq!(readout_scaling(3.0, 0.0).unwrap(), 3.0);
        assert_eq!(readout_scaling(3.0, 1.0).unwrap(), 0.0);
        assert_eq!(init_scaling(2.0, 0.25).unwrap(), 1.5);
        assert!(readout_scaling(1.0, 1.5).is_err());
        assert!(init_scaling(1.0, -0.1).is_err());
    }

    #[test]
    fn volumes() {
        let rec = GrowthRecord {
            realizations: 1,
            mean_size: vec![5.0; 11],
            stderr_size: vec![0.0; 11],
            mean_flips: vec![0.0; 11],
            stderr_flips: vec![0.0; 11],
        };
        assert!((spacetime_volume(&rec, 0.2).unwrap().volume - 10.0).abs() < 1e-12);
        let lin: Vec<f64> = (0..=100).map(|k| 3.0 * k as f64 * 0.01).collect();
        assert!((integrate_sizes(&lin, 0.01) - 3.0 / 2.0).abs() < 1e-12);
        // Fine trapezoid of (v t)^2 against the closed form.
        let (v, t) = (1.7, 2.0);
        let s: Vec<f64> = (0..=20000).map(|k| (v * k as f64 * t / 20000.0).powi(2)).collect();
        let want = ballistic_volume(v, t, 2).volume;
        assert!((integrate_sizes(&s, t / 20000.0) / want - 1.0).abs() < 1e-6);
    }

    #[test]
    fn loschmidt_and_bounds() {
        let v = |volume| VolumeEstimate { volume, source: VolumeSource::GrowthRecord };
        assert_eq!(loschmidt_factor(0.0, &v(3.0)), 1.0);
        assert_eq!(loschmidt_factor(2.0, &v(0.0)), 1.0);
        assert!((loschmidt_factor(1.0, &v(std::f64::consts::LN_2 / 2.0)) - 0.5).abs() < 1e-15);
        assert_eq!(noisy_sensitivity_bound(8, 0.0, &v(1.0), &v(2.0)), 4.0);
        let b = noisy_sensitivity_bound(8, 0.1, &v(1.5), &v(1.5));
        assert!((b - 4.0 * (-0.4f64 * 1.5).exp()).abs() < 1e-14);
        assert!((loschmidt_factor(0.1, &v(1.5)).powi(2) * 4.0 - b).abs() < 1e-14);
        assert_eq!(ballistic_bound(6, 0.0, 1.0, 2).unwrap(), 3.0);
        assert!((ballistic_bound(4, 1.0 / 32.0, 1.0, 1).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-14);
        assert!(ballistic_bound(4, 0.1, 1.0, 4).is_err());
        assert!(ballistic_bound(4, 0.1, 0.0, 1).is_err());
    }

    #[test]
    fn ballistic_bound_composes_from_volumes() {
        for d in 1..=3u32 {
            let (n, gamma, v_b) = (9usize, 0.02, 1.3);
            let t = (n as f64).powf(1.0 / d as f64) / v_b;
            let vol = ballistic_volume(v_b, t, d);
            let composed = noisy_sensitivity_bound(n, gamma, &vol, &vol);
            assert!((composed / ballistic_bound(n, gamma, v_b, d).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ballistic_bound_eventually_decreases() {
        let vals: Vec<f64> = (10..200).map(|n| ballistic_bound(n, 0.05, 1.0, 2).unwrap()).collect();
        let peak = vals.iter().cloned().fold(0.0, f64::max);
        let k = vals.iter().position(|&v| v == peak).unwrap();
        assert!(k < vals.len() - 1);
        assert!(vals[k..].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn depolarizing_channel_properties() {
        let mut rho = thermal_product(2, 0.3);
        rho[(0, 3)] = C64::new(0.1, 0.05);
        rho[(3, 0)] = C64::new(0.1, -0.05);
        let tr = rho.trace();
        depolarize(&mut rho, 1, 0.0);
        assert!((rho.trace() - tr).norm() < 1e-15);
        // Site 1 fully mixed: ρ = ρ_0 ⊗ 1/2.
        assert!((rho[(0, 0)] - rho[(2, 2)]).norm() < 1e-15);
        assert_eq!(rho[(0, 3)], C64::new(0.0, 0.0));
    }

    fn small_model(n: usize) -> SpinModel {
        build_all_to_all_gaussian(n, 1.0, 11).unwrap()
    }

    #[test]
    fn noiseless_oracle_matches_pure_state_protocols() {
        let n = 4;
        let m = small_model(n);
        let t = 1.5;
        let dynamics = HamiltonianEvolution::new(&m.hamiltonian, EvolutionParams::new(t)).unwrap();
        for phi in [0.0, 0.4] {
            let cfg = LocalProtocolConfig::new(1, Axis::X, phi);
            let want = local_sensitivity(&dynamics, &cfg).unwrap();
            let got = depolarizing_oracle(&m, &OracleProtocol::Local(cfg), &NoiseModel::default(), t, 10).unwrap();
            assert!((got.signal - want.signal).abs() < 1e-6);
            assert!((got.d_signal_d_phi - want.d_signal_d_phi).abs() < 1e-6);
            let g = GlobalProtocolConfig { epsilon: 0.5, phi, measurement: GlobalMeasurement::SinEpsSx };
            let want = global_sensitivity(&dynamics, &g).unwrap();
            let got = depolarizing_oracle(&m, &OracleProtocol::Global(g), &NoiseModel::default(), t, 10).unwrap();
            assert!((got.signal - want.signal).abs() < 1e-6);
            assert!((got.d_signal_d_phi - want.d_signal_d_phi).abs() < 1e-6);
            assert!((got.std_dev - want.std_dev).abs() < 1e-6);
        }
    }

    #[test]
    fn readout_noise_is_linear() {
        let n = 4;
        let m = small_model(n);
        let gr = 0.3;
        let noisy = NoiseModel { gamma_readout: gr, ..NoiseModel::default() };
        for p in [
            OracleProtocol::Local(LocalProtocolConfig::new(0, Axis::Y, 0.2)),
            OracleProtocol::Global(GlobalProtocolConfig { epsilon: 0.6, phi: 0.2, measurement: GlobalMeasurement::Sx }),
        ] {
            let clean = depolarizing_oracle(&m, &p, &NoiseModel::default(), 1.0, 4).unwrap();
            let dirty = depolarizing_oracle(&m, &p, &noisy, 1.0, 4).unwrap();
            assert!((dirty.d_signal_d_phi / clean.d_signal_d_phi - (1.0 - gr)).abs() < 1e-6);
        }
    }

    #[test]
    fn evolution_noise_suppresses_sensitivity() {
        let m = small_model(4);
        let cfg = OracleProtocol::Local(LocalProtocolConfig::new(0, Axis::X, 0.0));
        let etas: Vec<f64> = [0.0, 0.02, 0.05, 0.1, 0.2]
            .iter()
            .map(|&g| depolarizing_oracle(&m, &cfg, &NoiseModel::evolution(g), 1.2, 12).unwrap().eta_inv)
            .collect();
        assert!(etas.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{etas:?}");
        assert!(etas[4] < etas[0]);
    }

    #[test]
    fn oracle_rejects_large_systems() {
        let m = small_model(7);
        let cfg = OracleProtocol::Local(LocalProtocolConfig::new(0, Axis::X, 0.0));
        assert!(matches!(depolarizing_oracle(&m, &cfg, &NoiseModel::default(), 1.0, 1), Err(Error::TooLarge { .. })));
    }

    /// Initial-state noise reduces the Haar-averaged slope by `1 - γ_i`.
    #[test]
    fn init_noise_haar_average() {
        let n = 5;
        let gi = 0.2;
        let (mut clean, mut dirty) = (0.0, 0.0);
        for seed in 0..20 {
            let u = sample_haar_unitary(n, seed).unwrap().to_dense();
            clean += local_slope(&u, &thermal_product(n, 0.0), n);
            dirty += local_slope(&u, &thermal_product(n, 0.5 * gi), n);
        }
        let ratio = dirty / clean;
        assert!((ratio - (1.0 - gi)).abs() < 0.05 * (1.0 - gi), "{ratio}");
    }

    /// Slope at φ = 0 of the local protocol (V = σˣ_0) for a unitary `u` and
    /// initial state `rho0`.
    fn local_slope(u: &Mat, rho0: &Mat, n: usize) -> f64 {
        let v = pauli_matrix(&PauliString::single(n, 0, Pauli::X)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pulse = (Mat::identity(1 << n, 1 << n) + &v * C64::new(0.0, 1.0)) * C64::new(s, 0.0);
        let rho1 = u * rho0 * u.adjoint();
        let rho3 = u.adjoint() * (&pulse * rho1 * pulse.adjoint()) * u;
        let d = u * sz_commutator(&rho3, n) * u.adjoint();
        trace_product(&v, &d)
    }

    #[test]
    fn operator_sizes() {
        let n = 3;
        let xm = pauli_matrix(&"XIY".parse().unwrap()).unwrap();
        assert!((operator_size(&xm, n) - 2.0).abs() < 1e-12);
        let h = small_model(n).hamiltonian;
        let v = PauliString::single(n, 0, Pauli::X);
        let sizes = operator_size_curve(&h, &v, &[0.0, 0.5, 3.0]).unwrap();
        assert!((sizes[0] - 1.0).abs() < 1e-12);
        assert!(sizes[2] > sizes[0]);
        let (vv, vz) = dense_volumes(&h, &v, 1.0, 20).unwrap();
        assert!(vv.volume > 1.0 && vz.volume > 1.0);
    }
}

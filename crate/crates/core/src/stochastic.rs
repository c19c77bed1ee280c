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

//! Stochastic Clifford model of Hamiltonian scrambling.
//!
//! Each time step, every coupled pair `(i, j)` independently receives a
//! uniformly random two-qubit Clifford gate with probability
//! `P_ij = δt Σ_μ |h^μ_ij|²`. Operators are evolved in the Heisenberg picture
//! by table lookups, so system sizes far beyond the dense engine are cheap.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{self, conjugate_in_place, CLIFFORD_GROUP_ORDER};
use crate::dynamics::{DenseGate, GateCircuit};
use crate::error::{check_sites, Error, Result};
use crate::models::SpinModel;
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::rng::{self, domain};

/// Largest gate probability per pair produced by the default `δt`.
pub const DEFAULT_MAX_PROBABILITY: f64 = 0.05;
/// Gate probabilities above this value are accepted with a warning.
pub const WARN_PROBABILITY: f64 = 0.2;
/// `φ` step of the two-point stencil in the global estimator.
pub const ESTIMATOR_STENCIL: f64 = 1e-4;

const REALIZATION_CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSampler {
    n_sites: usize,
    delta_t: f64,
    /// `(i, j, P_ij)` for every pair with `P_ij > 0`, `i < j`.
    pairs: Vec<(usize, usize, f64)>,
}

impl GateSampler {
    pub fn new(model: &SpinModel, delta_t: f64) -> Result<Self> {
        Self::from_hamiltonian(&model.hamiltonian, delta_t)
    }

    /// Sampler whose largest pair probability is [`DEFAULT_MAX_PROBABILITY`].
    pub fn with_default_delta_t(model: &SpinModel) -> Result<Self> {
        Self::from_hamiltonian(&model.hamiltonian, default_delta_t(&model.hamiltonian))
    }

    pub fn from_hamiltonian(h: &PauliSum, delta_t: f64) -> Result<Self> {
        if !(delta_t > 0.0 && delta_t.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta_t {delta_t} must be positive")));
        }
        let mut pairs = Vec::new();
        for ((i, j), s) in h.pair_strengths() {
            let p = delta_t * s;
            if p > 1.0 {
                return Err(Error::GateProbability {
                    max_probability: p,
                    i,
                    j,
                });
            }
            if p > 0.0 {
                pairs.push((i, j, p));
            }
        }
        Ok(Self {
            n_sites: h.n_sites(),
            delta_t,
            pairs,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn pair_probabilities(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn max_probability(&self) -> f64 {
        self.max_pair().map_or(0.0, |p| p.2)
    }

    /// The pair with the largest gate probability.
    pub fn max_pair(&self) -> Option<(usize, usize, f64)> {
        self.pairs.iter().copied().reduce(|a, b| if b.2 > a.2 { b } else { a })
    }

    pub fn expected_gates_per_step(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).sum()
    }

    /// Warning when gates are too dense for the discretization to be faithful.
    pub fn warning(&self) -> Option<String> {
        let (i, j, p) = self.max_pair()?;
        (p > WARN_PROBABILITY).then(|| {
            format!("max P_ij = {p:.3} on pair ({i}, {j}) is above {WARN_PROBABILITY}; reduce delta_t")
        })
    }

    /// Evolution time nominally covered by `step` steps.
    pub fn time_equivalent(&self, step: usize) -> f64 {
        step as f64 * self.delta_t
    }

    /// Every gate of a `depth`-step realization as `(step, i, j, id)`, in
    /// application order. Each pair's gate steps are drawn as geometric
    /// gaps, which is the same law as one Bernoulli trial per pair and step;
    /// gates sharing a step are put in random order.
    fn sample_gates(&self, depth: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, usize, u16)> {
        let mut events = Vec::new();
        for &(i, j, p) in &self.pairs {
            let gap = Geometric::new(p).expect("probability in (0, 1]");
            let mut step = gap.sample(rng);
            while step < depth as u64 {
                events.push((step as usize, i, j, rng.random_range(0..CLIFFORD_GROUP_ORDER as u16)));
                step += 1 + gap.sample(rng);
            }
        }
        events.sort_by_key(|e| e.0);
        let mut start = 0;
        while start < events.len() {
            let step = events[start].0;
            let end = start + events[start..].iter().take_while(|e| e.0 == step).count();
            events[start..end].shuffle(rng);
            start = end;
        }
        events
    }
}

/// `δt` giving a largest pair probability of [`DEFAULT_MAX_PROBABILITY`].
pub fn default_delta_t(h: &PauliSum) -> f64 {
    let max = h.pair_strengths().into_iter().map(|(_, s)| s).fold(0.0, f64::max);
    if max > 0.0 {
        DEFAULT_MAX_PROBABILITY / max
    } else {
        1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordGate {
    pub step: usize,
    pub a: usize,
    pub b: usize,
    pub gate_id: u16,
}

/// `Ũ = U_D ⋯ U_1`; gates are listed in the order they act on a state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordCircuit {
    n_sites: usize,
    depth: usize,
    gates: Vec<CliffordGate>,
}

impl CliffordCircuit {
    pub fn from_gates(n_sites: usize, depth: usize, gates: Vec<CliffordGate>) -> Result<Self> {
        for g in &gates {
            for s in [g.a, g.b] {
                if s >= n_sites {
                    return Err(Error::SiteOutOfRange { site: s, n_sites });
                }
            }
            if g.a == g.b {
                return Err(Error::CoincidentSites(g.a, g.b));
            }
            if g.gate_id as usize >= CLIFFORD_GROUP_ORDER {
                return Err(Error::InvalidParameter(format!("Clifford id {} out of range", g.gate_id)));
            }
        }
        Ok(Self {
            n_sites,
            depth,
            gates,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn gates(&self) -> &[CliffordGate] {
        &self.gates
    }

    /// Gates belonging to the first `steps` steps.
    pub fn truncated(&self, steps: usize) -> Self {
        Self {
            n_sites: self.n_sites,
            depth: steps.min(self.depth),
            gates: self.gates.iter().filter(|g| g.step < steps).copied().collect(),
        }
    }

    /// `Ũ†`, as a circuit.
    pub fn inverse(&self) -> Self {
        let group = clifford::group();
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| {
                let m = group.matrix(g.gate_id);
                let adj = std::array::from_fn(|r| std::array::from_fn(|c| m[c][r].conj()));
                CliffordGate {
                    gate_id: group.id_of(&adj).expect("group is closed under inversion"),
                    step: self.depth.saturating_sub(1).saturating_sub(g.step),
                    ..*g
                }
            })
            .collect();
        Self {
            n_sites: self.n_sites,
            depth: self.depth,
            gates,
        }
    }

    /// `Ũ† p Ũ`.
    pub fn conjugate_pauli(&self, p: &PauliString) -> Result<PauliString> {
        check_sites(self.n_sites, p.n_sites())?;
        let group = clifford::group();
        let mut out = p.clone();
        for g in self.gates.iter().rev() {
            conjugate_in_place(&mut out, g.a, g.b, group.action(g.gate_id));
        }
        Ok(out)
    }

    /// The same gates as dense matrices, for the state-vector engine.
    pub fn to_gate_circuit(&self) -> Result<GateCircuit> {
        let group = clifford::group();
        let mut c = GateCircuit::new(self.n_sites);
        for g in &self.gates {
            c.push(DenseGate::Two {
                a: g.a,
                b: g.b,
                m: *group.matrix(g.gate_id),
            })?;
        }
        Ok(c)
    }

    /// x-masks of `Ũ† σˣ_j Ũ` for each site `j` (at most 64 sites).
    pub fn x_images(&self) -> Result<Vec<u64>> {
        if self.n_sites > 64 {
            return Err(Error::TooLarge {
                what: "global stochastic estimator",
                n: self.n_sites,
                limit: 64,
            });
        }
        (0..self.n_sites)
            .map(|j| {
                let p = self.conjugate_pauli(&PauliString::single(self.n_sites, j, Pauli::X))?;
                Ok(p.low_masks().0)
            })
            .collect()
    }

    /// True when the x-images of the `σˣ_j` are linearly independent over
    /// GF(2); only then does the global estimator keep exactly the
    /// `b = a ⊕ e_i` terms.
    pub fn global_estimator_is_exact(&self) -> Result<bool> {
        Ok(gf2_rank(&self.x_images()?) == self.n_sites)
    }
}

pub fn conjugate_pauli(circuit: &CliffordCircuit, p: &PauliString) -> Result<PauliString> {
    circuit.conjugate_pauli(p)
}

pub fn gf2_rank(vectors: &[u64]) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for &v in vectors {
        let mut x = v;
        for &b in &basis {
            x = x.min(x ^ b);
        }
        if x != 0 {
            basis.push(x);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

pub fn sample_circuit(sampler: &GateSampler, depth: usize, seed: u64) -> CliffordCircuit {
    let mut rng = rng::stream(seed, domain::GATES, 0);
    let gates = sampler
        .sample_gates(depth, &mut rng)
        .into_iter()
        .map(|(step, a, b, gate_id)| CliffordGate { step, a, b, gate_id })
        .collect();
    CliffordCircuit {
        n_sites: sampler.n_sites,
        depth,
        gates,
    }
}

/// Mean and standard error per step over realizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub realizations: usize,
    /// Operator weight, steps `0..=depth`.
    pub mean_size: Vec<f64>,
    pub stderr_size: Vec<f64>,
    /// Number of `σˣ`/`σʸ` factors, steps `0..=depth`.
    pub mean_flips: Vec<f64>,
    pub stderr_flips: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Adds the weight and flip count of one realization after each step to
/// `acc` as `[Σ size, Σ size², Σ flips, Σ flips²]`.
///
/// Steps are applied as `W_k = G_k† W_{k-1} G_k`, i.e. the newest step is the
/// outermost factor of `Ũ`. The true Heisenberg order has the newest step
/// innermost, but the steps are iid, so both give the same distribution of
/// the per-step curves while this order costs one pass instead of `depth`.
fn accumulate_growth(sampler: &GateSampler, depth: usize, v: &PauliString, rng: &mut ChaCha8Rng, acc: &mut [[u64; 4]]) {
    let group = clifford::group();
    let events = sampler.sample_gates(depth, rng);
    let mut w = v.clone();
    let mut next = 0;
    let (mut size, mut flips) = (w.weight() as u64, w.flip_count() as u64);
    for (step, a) in acc.iter_mut().enumerate() {
        // Row `step` holds the operator after `step` steps.
        if step > 0 {
            let mut changed = false;
            while next < events.len() && events[next].0 == step - 1 {
                let (_, i, j, id) = events[next];
                conjugate_in_place(&mut w, i, j, group.action(id));
                next += 1;
                changed = true;
            }
            if changed {
                size = w.weight() as u64;
                flips = w.flip_count() as u64;
            }
        }
        a[0] += size;
        a[1] += size * size;
        a[2] += flips;
        a[3] += flips * flips;
    }
}

fn mean_stderr(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

fn check_seed_operator(sampler: &GateSampler, v: &PauliString) -> Result<()> {
    check_sites(sampler.n_sites, v.n_sites())?;
    if v.weight() != 1 {
        return Err(Error::InvalidParameter(format!(
            "seed operator {v} must have weight 1"
        )));
    }
    Ok(())
}

pub fn growth_record(sampler: &GateSampler, depth: usize, v: &PauliString, realizations: usize, seed: u64) -> Result<GrowthRecord> {
    check_seed_operator(sampler, v)?;
    if realizations == 0 {
        return Err(Error::InvalidParameter("realizations must be at least 1".into()));
    }
    let len = depth + 1;
    // Integer sums make the reduction independent of how work is split.
    let acc = (0..realizations)
        .into_par_iter()
        .with_min_len(REALIZATION_CHUNK)
        .fold(
            || vec![[0u64; 4]; len],
            |mut acc, r| {
                accumulate_growth(sampler, depth, v, &mut rng::stream(seed, domain::GATES, r as u64), &mut acc);
                acc
            },
        )
        .reduce(
            || vec![[0u64; 4]; len],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    for k in 0..4 {
                        x[k] += y[k];
                    }
                }
                a
            },
        );
    let mut rec = GrowthRecord {
        realizations,
        mean_size: Vec::with_capacity(len),
        stderr_size: Vec::with_capacity(len),
        mean_flips: Vec::with_capacity(len),
        stderr_flips: Vec::with_capacity(len),
    };
    for a in acc {
        let (m, e) = mean_stderr(a[0] as f64, a[1] as f64, realizations);
        rec.mean_size.push(m);
        rec.stderr_size.push(e);
        let (m, e) = mean_stderr(a[2] as f64, a[3] as f64, realizations);
        rec.mean_flips.push(m);
        rec.stderr_flips.push(e);
    }
    Ok(rec)
}

/// `η⁻¹` per step: the mean flip count of the evolved butterfly operator.
pub fn local_stochastic_sensitivity(
    sampler: &GateSampler,
    depth: usize,
    v: &PauliString,
    realizations: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    let rec = growth_record(sampler, depth, v, realizations, seed)?;
    Ok(rec
        .mean_flips
        .iter()
        .zip(&rec.stderr_flips)
        .enumerate()
        .map(|(step, (&mean, &stderr))| CurvePoint { step, mean, stderr })
        .collect())
}

/// Saturation of the mean flip count when the operator is uniform over
/// non-identity strings.
pub fn saturated_flips(n: usize) -> f64 {
    let d2 = 4f64.powi(n as i32);
    0.5 * n as f64 * d2 / (d2 - 1.0)
}

/// Saturation of the mean operator weight.
pub fn saturated_size(n: usize) -> f64 {
    let d2 = 4f64.powi(n as i32);
    0.75 * n as f64 * d2 / (d2 - 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalEstimate {
    /// `<S_x>_φ`.
    pub signal: f64,
    pub signal_stderr: f64,
    pub d_signal: f64,
    pub d_signal_stderr: f64,
    /// `|∂_φ <S_x>| / (√N / 2)`.
    pub eta_inv: f64,
    pub eta_inv_stderr: f64,
    pub samples: usize,
    /// Number of circuits the samples were spread over.
    pub circuits: usize,
    /// Circuits on which the estimator drops no terms.
    pub exact_circuits: usize,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < std::f64::consts::PI) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0, π)")));
    }
    Ok(())
}

/// Per-sample values of the signal and its stencil derivative.
fn global_samples(images: &[u64], epsilon: f64, phi: f64, samples: usize, rng: &mut ChaCha8Rng) -> (f64, f64, f64, f64) {
    let n = images.len();
    let half = 0.5 * epsilon;
    let p = half.sin().powi(2);
    let t = half.tan();
    let h = ESTIMATOR_STENCIL;
    let scale = 0.5 * n as f64;
    let value = |delta_w: i32, delta_f: f64, phi: f64| {
        let theta = phi * delta_f;
        // Re[(i t)^{±1} e^{iθ}]
        if delta_w > 0 {
            -t * theta.sin()
        } else {
            theta.sin() / t
        }
    };
    let (mut s1, mut s2, mut d1, mut d2) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        let mut a = 0u64;
        let mut f_a = 0u64;
        for (j, &g) in images.iter().enumerate() {
            if rng.random::<f64>() < p {
                a |= 1 << j;
                f_a ^= g;
            }
        }
        let i = rng.random_range(0..n);
        let f_b = f_a ^ images[i];
        let delta_w = if a >> i & 1 == 1 { -1 } else { 1 };
        let delta_f = f_b.count_ones() as f64 - f_a.count_ones() as f64;
        let s = scale * value(delta_w, delta_f, phi);
        let d = scale * (value(delta_w, delta_f, phi + h) - value(delta_w, delta_f, phi - h)) / (2.0 * h);
        s1 += s;
        s2 += s * s;
        d1 += d;
        d2 += d * d;
    }
    (s1, s2, d1, d2)
}

fn finish_estimate(n: usize, (s, s_err): (f64, f64), (d, d_err): (f64, f64), samples: usize, circuits: usize, exact: usize) -> GlobalEstimate {
    let norm = 0.5 * (n as f64).sqrt();
    GlobalEstimate {
        signal: s,
        signal_stderr: s_err,
        d_signal: d,
        d_signal_stderr: d_err,
        eta_inv: d.abs() / norm,
        eta_inv_stderr: d_err / norm,
        samples,
        circuits,
        exact_circuits: exact,
    }
}

/// Monte-Carlo estimate of `<S_x>_φ` and its slope for one fixed circuit.
pub fn global_estimate_on_circuit(circuit: &CliffordCircuit, epsilon: f64, phi: f64, samples: usize, seed: u64) -> Result<GlobalEstimate> {
    check_epsilon(epsilon)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let images = circuit.x_images()?;
    let exact = (gf2_rank(&images) == images.len()) as usize;
    let mut rng = rng::stream(seed, domain::MONTE_CARLO, 0);
    let (s1, s2, d1, d2) = global_samples(&images, epsilon, phi, samples, &mut rng);
    Ok(finish_estimate(
        images.len(),
        mean_stderr(s1, s2, samples),
        mean_stderr(d1, d2, samples),
        samples,
        1,
        exact,
    ))
}

/// Circuit-averaged estimate: `circuits` independent circuits of the given
/// depth, `samples_per_circuit` Monte-Carlo samples each. Standard errors
/// come from the spread of the per-circuit means.
pub fn global_stochastic_estimator(
    sampler: &GateSampler,
    depth: usize,
    epsilon: f64,
    phi: f64,
    circuits: usize,
    samples_per_circuit: usize,
    seed: u64,
) -> Result<GlobalEstimate> {
    check_epsilon(epsilon)?;
    if circuits == 0 || samples_per_circuit == 0 {
        return Err(Error::InvalidParameter("circuits and samples must be at least 1".into()));
    }
    let per_circuit: Vec<Result<(f64, f64, bool)>> = (0..circuits)
        .into_par_iter()
        .map(|c| {
            let circuit = sample_circuit(sampler, depth, rng::child_seed(seed, domain::CIRCUIT, c as u64));
            let images = circuit.x_images()?;
            let mut rng = rng::stream(seed, domain::MONTE_CARLO, c as u64);
            let (s1, _, d1, _) = global_samples(&images, epsilon, phi, samples_per_circuit, &mut rng);
            let m = samples_per_circuit as f64;
            Ok((s1 / m, d1 / m, gf2_rank(&images) == images.len()))
        })
        .collect();
    let (mut s1, mut s2, mut d1, mut d2, mut exact) = (0.0, 0.0, 0.0, 0.0, 0);
    for r in per_circuit {
        let (s, d, e) = r?;
        s1 += s;
        s2 += s * s;
        d1 += d;
        d2 += d * d;
        exact += e as usize;
    }
    Ok(finish_estimate(
        sampler.n_sites,
        mean_stderr(s1, s2, circuits),
        mean_stderr(d1, d2, circuits),
        circuits * samples_per_circuit,
        circuits,
        exact,
    ))
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section_minimize<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while (hi - lo).abs() > tol * (c.abs() + d.abs()).max(tol) {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Linear interpolation on a curve sorted by abscissa, clamped at the ends.
pub fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let first = curve.first()?;
    let last = curve.last()?;
    if x <= first.0 {
        return Some(first.1);
    }
    if x >= last.0 {
        return Some(last.1);
    }
    let k = curve.partition_point(|p| p.0 <= x);
    let (x0, y0) = curve[k - 1];
    let (x1, y1) = curve[k];
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// `sqrt(Σ (s - e)² / Σ e²)`.
pub fn relative_rms(simulated: &[f64], expected: &[f64]) -> f64 {
    let num: f64 = simulated.iter().zip(expected).map(|(s, e)| (s - e).powi(2)).sum();
    let den: f64 = expected.iter().map(|e| e * e).sum();
    (num / den).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Evolution time per step.
    pub time_per_step: f64,
    pub relative_rms: f64,
}

/// Fits the time per step that best maps a step curve `(step, value)` onto
/// a reference curve `(time, value)`, searching `[lo, hi]`.
pub fn calibrate_step_to_time(steps: &[(f64, f64)], reference: &[(f64, f64)], lo: f64, hi: f64) -> Result<Calibration> {
    if steps.len() < 2 || reference.is_empty() {
        return Err(Error::InvalidParameter("calibration needs at least two steps and one reference point".into()));
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("bad calibration bracket [{lo}, {hi}]")));
    }
    let expected: Vec<f64> = reference.iter().map(|p| p.1).collect();
    let cost = |k: f64| {
        let sim: Vec<f64> = reference
            .iter()
            .map(|&(t, _)| interpolate(steps, t / k).unwrap_or(f64::NAN))
            .collect();
        relative_rms(&sim, &expected)
    };
    let (time_per_step, relative_rms) = golden_section_minimize(cost, lo, hi, 1e-8);
    Ok(Calibration {
        time_per_step,
        relative_rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Dynamics;
    use crate::models::{build_all_to_all_gaussian, Geometry};
    use crate::protocols::{GlobalButterfly, GlobalMeasurement};
    use crate::state::tests::{dense_pauli, random_string};
    use crate::state::StateVector;
    use nalgebra::DMatrix;
    use rand::SeedableRng;

    fn pair_model(c_xx: f64, c_yz: f64) -> SpinModel {
        let mut h = PauliSum::new(3);
        h.push_pair(0, Pauli::X, 1, Pauli::X, c_xx).unwrap();
        h.push_pair(0, Pauli::Y, 1, Pauli::Z, c_yz).unwrap();
        SpinModel {
            hamiltonian: h,
            geometry: Geometry::abstract_sites(3),
            label: "pair".into(),
            coupling_scale: 1.0,
            coupling_units: "MHz".into(),
            seed: None,
        }
    }

    #[test]
    fn gate_rate_single_coupling() {
        let m = pair_model(1.0, 0.5);
        let s = GateSampler::new(&m, 0.1).unwrap();
        let p = 0.1 * (1.0 + 0.25);
        assert_eq!(s.pair_probabilities(), &[(0, 1, p)]);
        let steps = 10_000;
        let c = sample_circuit(&s, steps, 3);
        let sigma = (steps as f64 * p * (1.0 - p)).sqrt();
        assert!((c.gates().len() as f64 - steps as f64 * p).abs() < 3.0 * sigma);
        assert!(matches!(GateSampler::new(&m, 1.0), Err(Error::GateProbability { .. })));
        assert!(GateSampler::new(&m, 0.17).unwrap().warning().is_some());
        assert!(s.warning().is_none());
    }

    #[test]
    fn zero_coupling_gives_empty_circuit() {
        let mut m = pair_model(1.0, 0.0);
        m.hamiltonian = PauliSum::new(3);
        let s = GateSampler::with_default_delta_t(&m).unwrap();
        assert!(sample_circuit(&s, 100, 0).gates().is_empty());
    }

    #[test]
    fn gates_per_step_expectation() {
        let m = build_all_to_all_gaussian(6, 1.0, 2).unwrap();
        let s = GateSampler::with_default_delta_t(&m).unwrap();
        assert!((s.max_probability() - DEFAULT_MAX_PROBABILITY).abs() < 1e-15);
        let steps = 10_000;
        let c = sample_circuit(&s, steps, 1);
        let var: f64 = s.pair_probabilities().iter().map(|p| p.2 * (1.0 - p.2)).sum();
        let sigma = (steps as f64 * var).sqrt();
        assert!((c.gates().len() as f64 - steps as f64 * s.expected_gates_per_step()).abs() < 3.0 * sigma);
        assert_eq!(c, sample_circuit(&s, steps, 1));
    }

    fn dense_unitary(c: &CliffordCircuit) -> DMatrix<crate::C64> {
        let gc = c.to_gate_circuit().unwrap();
        let dim = 1 << c.n_sites();
        let mut u = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let out = gc.forward(&StateVector::basis(c.n_sites(), col).unwrap()).unwrap();
            for (r, a) in out.amplitudes().iter().enumerate() {
                u[(r, col)] = *a;
            }
        }
        u
    }

    #[test]
    fn conjugation_matches_dense_oracle() {
        let m = build_all_to_all_gaussian(3, 1.0, 5).unwrap();
        let s = GateSampler::new(&m, 0.5 * default_delta_t(&m.hamiltonian) / DEFAULT_MAX_PROBABILITY).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..5 {
            let c = sample_circuit(&s, 6, seed);
            assert!(!c.gates().is_empty());
            let u = dense_unitary(&c);
            for _ in 0..10 {
                let p = random_string(3, &mut rng);
                let want = u.adjoint() * dense_pauli(&p) * &u;
                let got = dense_pauli(&c.conjugate_pauli(&p).unwrap());
                assert!((want - got).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn empty_circuit_and_round_trip() {
        let m = build_all_to_all_gaussian(8, 1.0, 1).unwrap();
        let s = GateSampler::with_default_delta_t(&m).unwrap();
        let p: PauliString = "-iXYZIXXZY".parse().unwrap();
        assert_eq!(sample_circuit(&s, 0, 0).conjugate_pauli(&p).unwrap(), p);
        let c = sample_circuit(&s, 200, 4);
        let q = c.conjugate_pauli(&p).unwrap();
        assert_eq!(c.inverse().conjugate_pauli(&q).unwrap(), p);
        assert!(c.conjugate_pauli(&PauliString::identity(3)).is_err());
    }

    #[test]
    fn truncation_keeps_prefix() {
        let m = build_all_to_all_gaussian(5, 1.0, 1).unwrap();
        let s = GateSampler::with_default_delta_t(&m).unwrap();
        let c = sample_circuit(&s, 50, 2);
        let t = c.truncated(20);
        assert!(t.gates().iter().all(|g| g.step < 20));
        assert_eq!(&c.gates()[..t.gates().len()], t.gates());
    }

    #[test]
    fn growth_initial_values() {
        let m = build_all_to_all_gaussian(6, 1.0, 1).unwrap();
        let s = GateSampler::with_default_delta_t(&m).unwrap();
        let x = PauliString::single(6, 0, Pauli::X);
        let z = PauliString::single(6, 0, Pauli::Z);
        let curve = local_stochastic_sensitivity(&s, 0, &x, 10, 0).unwrap();
        assert_eq!(curve[0].mean, 1.0);
        assert_eq!(local_stochastic_sensitivity(&s, 0, &z, 10, 0).unwrap()[0].mean, 0.0);
        let rec = growth_record(&s, 5, &z, 10, 0).unwrap();
        assert_eq!(rec.mean_size[0], 1.0);
        assert!(growth_record(&s, 5, &PauliString::identity(6), 10, 0).is_err());
    }

    #[test]
    fn growth_saturates_and_is_deterministic() {
        let n = 12;
        let m = build_all_to_all_gaussian(n, 1.0, 3).unwrap();
        let s = GateSampler::with_default_delta_t(&m).unwrap();
        let x = PauliString::single(n, 0, Pauli::X);
        let rec = growth_record(&s, 400, &x, 2000, 7).unwrap();
        let last = rec.mean_size.len() - 1;
        assert!((rec.mean_size[last] / saturated_size(n) - 1.0).abs() < 0.05);
        assert!((rec.mean_flips[last] / saturated_flips(n) - 1.0).abs() < 0.05);
        // Mean weight grows early on.
        assert!(rec.mean_size[50] > rec.mean_size[5]);
        assert_eq!(rec, growth_record(&s, 400, &x, 2000, 7).unwrap());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        assert_eq!(rec, pool.install(|| growth_record(&s, 400, &x, 2000, 7).unwrap()));
    }

    /// Deep random Clifford circuits reproduce the Haar average of the flip
    /// count, `N/2 + (N/2)/(4^N - 1)`, also obtained here from dense Haar
    /// unitaries.
    #[test]
    fn design_consistency_with_haar() {
        let n = 4;
        let m = build_all_to_all_gaussian(n, 1.0, 8).unwrap();
        let s = GateSampler::with_default_delta_t(&m).unwrap();
        let curve = local_stochastic_sensitivity(&s, 300, &PauliString::single(n, 0, Pauli::X), 10_000, 1).unwrap();
        let last = curve.last().unwrap();
        let want = saturated_flips(n);
        assert!((last.mean - want).abs() < 3.0 * last.stderr, "{} ± {} vs {want}", last.mean, last.stderr);
        let mut vals = Vec::new();
        for seed in 0..400 {
            let u = crate::haar::sample_haar_unitary(n, seed).unwrap();
            let lb = crate::protocols::LocalButterfly::prepare(&u, 0, crate::pauli::Axis::X).unwrap();
            vals.push(lb.closed_form_eta_inv());
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        let se = (var / vals.len() as f64).sqrt();
        assert!((mean - want).abs() < 3.0 * se + 3.0 * last.stderr, "{mean} ± {se}");
    }

    #[test]
    fn gf2_rank_basics() {
        assert_eq!(gf2_rank(&[0b01, 0b10, 0b11]), 2);
        assert_eq!(gf2_rank(&[0b001, 0b010, 0b100]), 3);
        assert_eq!(gf2_rank(&[0, 0]), 0);
    }

    #[test]
    fn estimator_vanishes_without_rotation() {
        let m = build_all_to_all_gaussian(6, 1.0, 1).unwrap();
        let s = GateSampler::with_default_delta_t(&m).unwrap();
        let c = sample_circuit(&s, 100, 3);
        let e = global_estimate_on_circuit(&c, 1e-9, 0.3, 2000, 0).unwrap();
        assert!(e.signal.abs() < 1e-6 && e.d_signal.abs() < 1e-6, "{e:?}");
        assert!(global_estimate_on_circuit(&c, 0.0, 0.3, 10, 0).is_err());
    }

    #[test]
    fn estimator_matches_dense_global_signal() {
        let n = 6;
        let m = build_all_to_all_gaussian(n, 1.0, 4).unwrap();
        let s = GateSampler::with_default_delta_t(&m).unwrap();
        let mut checked = 0;
        for seed in 0..40 {
            let c = sample_circuit(&s, 60, seed);
            if !c.global_estimator_is_exact().unwrap() {
                continue;
            }
            let dense = c.to_gate_circuit().unwrap();
            let (eps, phi) = (0.7, 0.25);
            let gb = GlobalButterfly::prepare(&dense, eps).unwrap();
            let want = gb.signal(phi, GlobalMeasurement::Sx).unwrap();
            let dwant = gb.sensitivity(phi, GlobalMeasurement::Sx).unwrap().d_signal_d_phi;
            let est = global_estimate_on_circuit(&c, eps, phi, 40_000, seed).unwrap();
            assert_eq!(est.exact_circuits, 1);
            assert!((est.signal - want).abs() < 3.5 * est.signal_stderr, "{est:?} vs {want}");
            assert!((est.d_signal - dwant).abs() < 3.5 * est.d_signal_stderr, "{est:?} vs {dwant}");
            checked += 1;
            if checked == 3 {
                break;
            }
        }
        assert_eq!(checked, 3);
    }

    #[test]
    fn calibration_recovers_scale() {
        let steps: Vec<(f64, f64)> = (0..200).map(|k| (k as f64, 1.0 - (-0.05 * k as f64).exp())).collect();
        let reference: Vec<(f64, f64)> = (1..40).map(|k| {
            let t = 0.1 * k as f64;
            (t, 1.0 - (-0.05 * t / 0.02).exp())
        }).collect();
        let cal = calibrate_step_to_time(&steps, &reference, 0.001, 1.0).unwrap();
        assert!((cal.time_per_step - 0.02).abs() < 1e-4, "{cal:?}");
        assert!(cal.relative_rms < 1e-3);
        assert!(calibrate_step_to_time(&steps, &reference, 0.0, 1.0).is_err());
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section_minimize(|x| (x - 1.3).powi(2) + 2.0, 0.0, 5.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-6 && (fx - 2.0).abs() < 1e-10);
    }
}

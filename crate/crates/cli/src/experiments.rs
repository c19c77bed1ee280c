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


//! The named experiments. Each fans independent realizations out over the
//! thread pool, collects them in realization order and reduces
//! sequentially, so tables do not depend on the number of threads.

use std::path::{Path, PathBuf};

use butterfly_core::analytics;
use butterfly_core::dynamics::Dynamics;
use butterfly_core::noise::{self, OracleProtocol};
use butterfly_core::protocols::{GlobalButterfly, LocalButterfly, FD_STEP};
use butterfly_core::rng::domain;
use butterfly_core::stochastic::{self, GateSampler};
use butterfly_core::{
    Axis, GlobalMeasurement, GlobalProtocolConfig, HamiltonianEvolution, EvolutionParams, LocalProtocolConfig,
    NoiseModel, PauliString, StateVector,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind, NoiseChannel, ProtocolKind};
use crate::error::Result;
use crate::output::{CalibrationEntry, Cell, Provenance, Table};
use crate::setup::{realization_dynamics, realization_seed, Instance};

/// Everything an experiment writes besides its tables.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<String>,
    pub calibration: Vec<CalibrationEntry>,
    pub warnings: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    provenance: &'a Provenance,
    outcome: Outcome,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, table: &Table) -> Result<()> {
        let path: PathBuf = self.dir.join(name);
        table.write(&path, self.provenance)?;
        self.outcome.files.push(name.to_string());
        Ok(())
    }

    fn warn(&mut self, w: Option<String>) {
        if let Some(w) = w {
            if !self.outcome.warnings.contains(&w) {
                self.outcome.warnings.push(w);
            }
        }
    }
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn column<T>(rows: &[Vec<T>], k: usize, f: impl Fn(&T) -> f64) -> Vec<f64> {
    rows.iter().map(|r| f(&r[k])).collect()
}

fn mean_cells(xs: &[f64]) -> [Cell; 2] {
    let (m, e) = mean_stderr(xs);
    [m.into(), e.into()]
}

pub fn execute(cfg: &ExperimentConfig, dir: &Path, provenance: &Provenance) -> Result<Outcome> {
    let mut w = Writer {
        dir,
        provenance,
        outcome: Outcome::default(),
    };
    use ExperimentKind::*;
    match cfg.experiment {
        LocalHaar | LocalHamiltonian => local(cfg, &mut w)?,
        PhiSweep => phi_sweep(cfg, &mut w)?,
        GlobalHamiltonian | EpsilonSweep => global(cfg, &mut w)?,
        Quadrature => quadrature(cfg, &mut w)?,
        DoubleEcho => double_echo(cfg, &mut w)?,
        StochasticGrowth => stochastic_growth(cfg, &mut w)?,
        StochasticGlobal => stochastic_global(cfg, &mut w)?,
        NoiseSweep => noise_sweep(cfg, &mut w)?,
    }
    Ok(w.outcome)
}

/// The time grid, or a single untimed point for Haar and circuit dynamics.
fn time_grid(cfg: &ExperimentConfig) -> Vec<Option<f64>> {
    match (&cfg.model, &cfg.times) {
        (Some(m), Some(t)) if !m.is_circuit() => t.iter().copied().map(Some).collect(),
        _ => vec![None],
    }
}

fn phis(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.phis.clone().unwrap_or_else(|| vec![0.0])
}

/// `f` on every realization at `(n, time)`, in realization order.
fn over_realizations<T, F>(cfg: &ExperimentConfig, n: usize, time: Option<f64>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&dyn Dynamics) -> Result<T> + Sync,
{
    (0..cfg.realizations)
        .into_par_iter()
        .map(|r| {
            let d = realization_dynamics(cfg.model.as_ref(), n, time.unwrap_or(0.0), cfg.master_seed, r)?;
            f(d.as_ref())
        })
        .collect()
}

fn local(cfg: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let mut t = Table::new(&[
        "n_sites",
        "time",
        "phi",
        "mean_signal",
        "stderr_signal",
        "mean_eta_inv",
        "stderr_eta_inv",
        "mean_polarization",
        "haar_eta_inv",
        "realizations",
    ]);
    let phis = phis(cfg);
    let b = cfg.butterfly;
    for n in cfg.n_sites.to_vec() {
        for time in time_grid(cfg) {
            let runs = over_realizations(cfg, n, time, |d| {
                let lb = LocalButterfly::prepare(d, b.site, b.axis)?;
                phis.iter().map(|&phi| Ok(lb.sensitivity(phi, FD_STEP)?)).collect::<Result<Vec<_>>>()
            })?;
            for (k, &phi) in phis.iter().enumerate() {
                for r in &runs {
                    w.warn(r[k].warning.clone());
                }
                let [ms, es] = mean_cells(&column(&runs, k, |s| s.signal));
                let [me, ee] = mean_cells(&column(&runs, k, |s| s.eta_inv));
                let (mp, _) = mean_stderr(&column(&runs, k, |s| s.scrambled_polarization.unwrap_or(f64::NAN)));
                t.push(vec![
                    n.into(),
                    time.into(),
                    phi.into(),
                    ms,
                    es,
                    me,
                    ee,
                    mp.into(),
                    analytics::haar_local_sensitivity(n, phi).into(),
                    cfg.realizations.into(),
                ]);
            }
        }
    }
    w.write("results.csv", &t)
}

fn phi_sweep(cfg: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let mut t = Table::new(&[
        "n_sites",
        "time",
        "phi",
        "mean_signal",
        "stderr_signal",
        "haar_signal",
        "realizations",
    ]);
    let phis = phis(cfg);
    let b = cfg.butterfly;
    for n in cfg.n_sites.to_vec() {
        for time in time_grid(cfg) {
            let runs = over_realizations(cfg, n, time, |d| {
                let lb = LocalButterfly::prepare(d, b.site, b.axis)?;
                phis.iter().map(|&phi| Ok(lb.signal(phi)?)).collect::<Result<Vec<_>>>()
            })?;
            for (k, &phi) in phis.iter().enumerate() {
                let [m, e] = mean_cells(&column(&runs, k, |&x| x));
                t.push(vec![
                    n.into(),
                    time.into(),
                    phi.into(),
                    m,
                    e,
                    haar_signal(n, phi).into(),
                    cfg.realizations.into(),
                ]);
            }
        }
    }
    w.write("results.csv", &t)
}

/// Haar-averaged `<V>_φ` in the sign convention of the simulated signal.
pub fn haar_signal(n: usize, phi: f64) -> f64 {
    -analytics::haar_local_signal(n, phi)
}

fn global_reference(n: usize, eps_bar: f64, m: GlobalMeasurement) -> f64 {
    match m {
        GlobalMeasurement::Sx => analytics::haar_global_sensitivity(n, eps_bar),
        GlobalMeasurement::SinEpsSx => {
            let eps = analytics::epsilon_from_eps_bar(n, eps_bar);
            analytics::haar_global_sin_sensitivity(n, analytics::rotation_overlap(n, eps))
        }
    }
}

fn global(cfg: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let mut t = Table::new(&[
        "n_sites",
        "time",
        "eps_bar",
        "phi",
        "mean_signal",
        "stderr_signal",
        "mean_eta_inv",
        "stderr_eta_inv",
        "eta_inv_over_n",
        "haar_eta_inv",
        "realizations",
    ]);
    let mut summary = Table::new(&[
        "n_sites",
        "time",
        "phi",
        "relative_rms",
        "best_eps_bar",
        "best_eta_inv_over_n",
    ]);
    let phis = phis(cfg);
    let eps_bars = cfg.eps_bars.clone().unwrap_or_default();
    let m = cfg.measurement;
    for n in cfg.n_sites.to_vec() {
        for time in time_grid(cfg) {
            let runs = over_realizations(cfg, n, time, |d| {
                let evolved = d.forward(&StateVector::zero(n)?)?;
                let mut out = Vec::with_capacity(eps_bars.len() * phis.len());
                for &eb in &eps_bars {
                    let gb = GlobalButterfly::from_evolved(d, &evolved, analytics::epsilon_from_eps_bar(n, eb))?;
                    for &phi in &phis {
                        out.push(gb.sensitivity(phi, m)?);
                    }
                }
                Ok(out)
            })?;
            for (p, &phi) in phis.iter().enumerate() {
                let mut measured = Vec::new();
                let mut reference = Vec::new();
                for (e, &eb) in eps_bars.iter().enumerate() {
                    let k = e * phis.len() + p;
                    let [ms, es] = mean_cells(&column(&runs, k, |s| s.signal));
                    let (me, ee) = mean_stderr(&column(&runs, k, |s| s.eta_inv));
                    let reference_eta = global_reference(n, eb, m);
                    measured.push(me / n as f64);
                    reference.push(reference_eta / n as f64);
                    t.push(vec![
                        n.into(),
                        time.into(),
                        eb.into(),
                        phi.into(),
                        ms,
                        es,
                        me.into(),
                        ee.into(),
                        (me / n as f64).into(),
                        reference_eta.into(),
                        cfg.realizations.into(),
                    ]);
                }
                let (best, best_val) = measured
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
                summary.push(vec![
                    n.into(),
                    time.into(),
                    phi.into(),
                    stochastic::relative_rms(&measured, &reference).into(),
                    eps_bars[best].into(),
                    best_val.into(),
                ]);
            }
        }
    }
    w.write("results.csv", &t)?;
    if cfg.experiment == ExperimentKind::EpsilonSweep {
        w.write("summary.csv", &summary)?;
    }
    Ok(())
}

fn quadrature(cfg: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let mut t = Table::new(&[
        "n_sites",
        "time",
        "phi",
        "mean_projection_signal",
        "stderr_projection_signal",
        "mean_branch_weight",
        "mean_optimal_eta_inv",
        "stderr_optimal_eta_inv",
        "haar_projection_signal",
        "haar_optimal_eta_inv",
        "realizations",
    ]);
    let phis = phis(cfg);
    let b = cfg.butterfly;
    for n in cfg.n_sites.to_vec() {
        for time in time_grid(cfg) {
            let runs = over_realizations(cfg, n, time, |d| {
                let lb = LocalButterfly::prepare(d, b.site, b.axis)?;
                let dist = lb.flipped_distribution();
                phis.iter()
                    .map(|&phi| {
                        let p = lb.projection(phi)?;
                        Ok([p.signal, p.branch_weight, dist.optimal_quadrature_sensitivity(phi)])
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            for (k, &phi) in phis.iter().enumerate() {
                let [ms, es] = mean_cells(&column(&runs, k, |x| x[0]));
                let (mw, _) = mean_stderr(&column(&runs, k, |x| x[1]));
                let [mo, eo] = mean_cells(&column(&runs, k, |x| x[2]));
                t.push(vec![
                    n.into(),
                    time.into(),
                    phi.into(),
                    ms,
                    es,
                    mw.into(),
                    mo,
                    eo,
                    analytics::haar_projection_signal(n, phi).into(),
                    analytics::haar_local_sensitivity(n, phi).into(),
                    cfg.realizations.into(),
                ]);
            }
        }
    }
    w.write("results.csv", &t)
}

fn double_echo(cfg: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let mut t = Table::new(&[
        "n_sites",
        "time",
        "phi",
        "mean_return_probability",
        "stderr_return_probability",
        "haar_return_probability",
        "realizations",
    ]);
    let phis = phis(cfg);
    let b = cfg.butterfly;
    let eps_bar = cfg.eps_bars.as_ref().and_then(|e| e.first().copied());
    for n in cfg.n_sites.to_vec() {
        for time in time_grid(cfg) {
            let runs = over_realizations(cfg, n, time, |d| match cfg.protocol {
                ProtocolKind::Local => {
                    let lb = LocalButterfly::prepare(d, b.site, b.axis)?;
                    phis.iter().map(|&phi| Ok(lb.double_echo(phi)?)).collect::<Result<Vec<_>>>()
                }
                ProtocolKind::Global => {
                    let eps = analytics::epsilon_from_eps_bar(n, eps_bar.unwrap_or(analytics::optimal_eps_bar()));
                    let gb = GlobalButterfly::prepare(d, eps)?;
                    phis.iter().map(|&phi| Ok(gb.double_echo(phi)?)).collect::<Result<Vec<_>>>()
                }
            })?;
            for (k, &phi) in phis.iter().enumerate() {
                let [m, e] = mean_cells(&column(&runs, k, |&x| x));
                let reference = (cfg.protocol == ProtocolKind::Local).then(|| analytics::haar_double_echo(n, phi));
                t.push(vec![
                    n.into(),
                    time.into(),
                    phi.into(),
                    m,
                    e,
                    reference.into(),
                    cfg.realizations.into(),
                ]);
            }
        }
    }
    w.write("results.csv", &t)
}

fn butterfly_operator(cfg: &ExperimentConfig, n: usize) -> PauliString {
    PauliString::single(n, cfg.butterfly.site, cfg.butterfly.axis.into())
}

fn sampler_for(cfg: &ExperimentConfig, inst: &Instance) -> Result<GateSampler> {
    let m = inst.hamiltonian_model()?;
    Ok(match cfg.delta_t {
        Some(dt) => GateSampler::new(m, dt)?,
        None => GateSampler::with_default_delta_t(m)?,
    })
}

fn curve_table(sampler: &GateSampler, mean: &[f64], stderr: &[f64], realizations: usize, stride: usize) -> Table {
    let mut t = Table::new(&["step", "time_equivalent", "mean", "stderr", "realizations"]);
    for step in (0..mean.len()).step_by(stride) {
        t.push(vec![
            step.into(),
            sampler.time_equivalent(step).into(),
            mean[step].into(),
            stderr[step].into(),
            realizations.into(),
        ]);
    }
    t
}

/// Exact local `η⁻¹(t)` at `φ = 0` for one Hamiltonian.
pub fn exact_local_curve(inst: &Instance, site: usize, axis: Axis, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    let m = inst.hamiltonian_model()?;
    let op = butterfly_core::CompiledOperator::new(&m.hamiltonian)?;
    times
        .par_iter()
        .map(|&time| {
            let d = HamiltonianEvolution::from_compiled(op.clone(), EvolutionParams::new(time))?;
            Ok((time, LocalButterfly::prepare(&d, site, axis)?.closed_form_eta_inv()))
        })
        .collect()
}

fn stochastic_growth(cfg: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let model = cfg.model.as_ref().expect("validated");
    let depth = cfg.depth.expect("validated");
    for n in cfg.n_sites.to_vec() {
        let inst = Instance::build(model, n, cfg.master_seed, 0)?;
        let sampler = sampler_for(cfg, &inst)?;
        w.warn(sampler.warning().map(|s| format!("n_sites = {n}: {s}")));
        let v = butterfly_operator(cfg, n);
        let seed = realization_seed(cfg.master_seed, domain::GATES, n, 0);
        let rec = stochastic::growth_record(&sampler, depth, &v, cfg.realizations, seed)?;
        let flips = curve_table(&sampler, &rec.mean_flips, &rec.stderr_flips, rec.realizations, cfg.stride);
        w.write(&format!("sensitivity_n{n}.csv"), &flips)?;
        let size = curve_table(&sampler, &rec.mean_size, &rec.stderr_size, rec.realizations, cfg.stride);
        w.write(&format!("size_n{n}.csv"), &size)?;

        if let Some(cal) = &cfg.calibration {
            let exact = exact_local_curve(&inst, cfg.butterfly.site, cfg.butterfly.axis, &cal.times)?;
            let mut t = Table::new(&["time", "eta_inv"]);
            for &(time, eta) in &exact {
                t.push(vec![time.into(), eta.into()]);
            }
            w.write(&format!("exact_n{n}.csv"), &t)?;
            let steps: Vec<(f64, f64)> = rec.mean_flips.iter().enumerate().map(|(s, &m)| (s as f64, m)).collect();
            let fit = stochastic::calibrate_step_to_time(&steps, &exact, cal.bracket[0], cal.bracket[1])?;
            w.outcome.calibration.push(CalibrationEntry {
                n_sites: n,
                delta_t: sampler.delta_t(),
                time_per_step: fit.time_per_step,
                relative_rms: fit.relative_rms,
            });
        }
    }
    Ok(())
}

fn stochastic_global(cfg: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let model = cfg.model.as_ref().expect("validated");
    let depth = cfg.depth.expect("validated");
    let mut t = Table::new(&[
        "n_sites",
        "depth",
        "time_equivalent",
        "eps_bar",
        "phi",
        "signal",
        "signal_stderr",
        "d_signal",
        "d_signal_stderr",
        "eta_inv",
        "eta_inv_stderr",
        "circuits",
        "samples_per_circuit",
        "exact_circuits",
        "haar_eta_inv",
    ]);
    let phis = phis(cfg);
    for n in cfg.n_sites.to_vec() {
        let inst = Instance::build(model, n, cfg.master_seed, 0)?;
        let sampler = sampler_for(cfg, &inst)?;
        w.warn(sampler.warning().map(|s| format!("n_sites = {n}: {s}")));
        let seed = realization_seed(cfg.master_seed, domain::MONTE_CARLO, n, 0);
        for &eb in cfg.eps_bars.as_deref().unwrap_or_default() {
            let eps = analytics::epsilon_from_eps_bar(n, eb);
            for &phi in &phis {
                let est = stochastic::global_stochastic_estimator(&sampler, depth, eps, phi, cfg.realizations, cfg.samples, seed)?;
                t.push(vec![
                    n.into(),
                    depth.into(),
                    sampler.time_equivalent(depth).into(),
                    eb.into(),
                    phi.into(),
                    est.signal.into(),
                    est.signal_stderr.into(),
                    est.d_signal.into(),
                    est.d_signal_stderr.into(),
                    est.eta_inv.into(),
                    est.eta_inv_stderr.into(),
                    est.circuits.into(),
                    cfg.samples.into(),
                    est.exact_circuits.into(),
                    analytics::haar_global_sensitivity_finite(n, eps).into(),
                ]);
            }
        }
    }
    w.write("results.csv", &t)
}

fn noise_sweep(cfg: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let model = cfg.model.as_ref().expect("validated");
    let n = cfg.n_sites.to_vec()[0];
    let time = cfg.times.as_ref().expect("validated")[0];
    let gammas = cfg.gammas.clone().expect("validated");
    let phi = phis(cfg)[0];
    let inst = Instance::build(model, n, cfg.master_seed, 0)?;
    let sm = inst.hamiltonian_model()?;
    let protocol = match cfg.protocol {
        ProtocolKind::Local => {
            OracleProtocol::Local(LocalProtocolConfig::new(cfg.butterfly.site, cfg.butterfly.axis, phi))
        }
        ProtocolKind::Global => {
            let eb = cfg.eps_bars.as_ref().expect("validated")[0];
            OracleProtocol::Global(GlobalProtocolConfig::from_eps_bar(n, eb, phi, cfg.measurement))
        }
    };
    let v = butterfly_operator(cfg, n);
    let (vol_v, vol_z) = noise::dense_volumes(&sm.hamiltonian, &v, time, cfg.trotter_steps.min(64))?;
    let channel = |g: f64| match cfg.noise_channel {
        NoiseChannel::Evolution => NoiseModel::evolution(g),
        NoiseChannel::Readout => NoiseModel {
            gamma_readout: g,
            ..NoiseModel::evolution(0.0)
        },
        NoiseChannel::Init => NoiseModel {
            gamma_init: g,
            ..NoiseModel::evolution(0.0)
        },
    };
    let clean = noise::depolarizing_oracle(sm, &protocol, &NoiseModel::evolution(0.0), time, cfg.trotter_steps)?.eta_inv;
    let measured: Vec<f64> = gammas
        .par_iter()
        .map(|&g| Ok(noise::depolarizing_oracle(sm, &protocol, &channel(g), time, cfg.trotter_steps)?.eta_inv))
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["gamma", "eta_inv_measured", "eta_inv_bound", "vol_v", "vol_z"]);
    for (&g, &eta) in gammas.iter().zip(&measured) {
        let bound = match cfg.noise_channel {
            NoiseChannel::Evolution => noise::noisy_sensitivity_bound(n, g, &vol_v, &vol_z),
            NoiseChannel::Readout => noise::readout_scaling(clean, g)?,
            NoiseChannel::Init => noise::init_scaling(clean, g)?,
        };
        t.push(vec![g.into(), eta.into(), bound.into(), vol_v.volume.into(), vol_z.volume.into()]);
    }
    w.write("noise.csv", &t)
}

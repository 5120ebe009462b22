//! Fourier-model fits of trained parameter functions and the noise / register
//! size sweeps built on them.
//!
//! Each function is fit with `f(t) = a0 + Σ_{m ≤ order} [a_m cos(mωt) + b_m sin(mωt)]`.
//! For fixed ω the coefficients are a linear least-squares problem; ω itself
//! is found by a 512-point grid over `(0, π/dt]` followed by golden-section
//! refinement around the best grid point.

use std::io::Write;

use log::debug;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{Param, ParameterSchedule, TimeGrid};
use crate::error::{Error, Result};
use crate::learning::{self, bootstrap, default_initial_schedule, LearnConfig, TrainingReport};
use crate::noise::NoiseConfig;
use crate::witness::training_set;

const GRID_POINTS: usize = 512;
const GOLDEN_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierFit {
    pub order: usize,
    pub a0: f64,
    pub a1: f64,
    pub b1: f64,
    pub a2: Option<f64>,
    pub b2: Option<f64>,
    pub omega: f64,
    pub fit_rms: f64,
    pub r_squared: f64,
}

impl FourierFit {
    pub fn value_at(&self, t: f64) -> f64 {
        let w = self.omega * t;
        let mut v = self.a0 + self.a1 * w.cos() + self.b1 * w.sin();
        if let (Some(a2), Some(b2)) = (self.a2, self.b2) {
            v += a2 * (2.0 * w).cos() + b2 * (2.0 * w).sin();
        }
        v
    }

    /// Named coefficients in a fixed order: a0, a1, b1, [a2, b2], omega.
    pub fn coefficients(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("a0", self.a0), ("a1", self.a1), ("b1", self.b1)];
        if let (Some(a2), Some(b2)) = (self.a2, self.b2) {
            out.push(("a2", a2));
            out.push(("b2", b2));
        }
        out.push(("omega", self.omega));
        out
    }
}

/// Harmonic order used for each parameter function.
pub fn default_order(p: Param) -> usize {
    match p {
        Param::K => 2,
        Param::Epsilon | Param::Zeta => 1,
    }
}

struct LinearFit {
    coefs: Vec<f64>,
    ss_res: f64,
}

fn design(times: &[f64], omega: f64, order: usize) -> DMatrix<f64> {
    DMatrix::from_fn(times.len(), 1 + 2 * order, |i, c| {
        if c == 0 {
            return 1.0;
        }
        let m = ((c + 1) / 2) as f64;
        let arg = m * omega * times[i];
        if c % 2 == 1 {
            arg.cos()
        } else {
            arg.sin()
        }
    })
}

fn linear_fit(series: &DVector<f64>, times: &[f64], omega: f64, order: usize) -> Result<LinearFit> {
    let a = design(times, omega, order);
    let svd = a.clone().svd(true, true);
    let tol = svd.singular_values.max() * 1e-13 * times.len() as f64;
    let coefs = svd.solve(series, tol).map_err(|e| Error::Internal(format!("least squares failed: {e}")))?;
    let resid = &a * &coefs - series;
    Ok(LinearFit { coefs: coefs.iter().copied().collect(), ss_res: resid.norm_squared() })
}

fn check_times(series: &[f64], times: &[f64], order: usize) -> Result<f64> {
    if !(1..=2).contains(&order) {
        return Err(Error::arg(format!("harmonic order must be 1 or 2, got {order}")));
    }
    if series.len() != times.len() {
        return Err(Error::arg(format!("{} values but {} times", series.len(), times.len())));
    }
    let free = 2 * order + 2;
    if series.len() < free.max(6) {
        return Err(Error::arg(format!(
            "{} points cannot determine an order-{order} fit (need at least {})",
            series.len(),
            free.max(6)
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("times must be strictly increasing"));
    }
    if series.iter().chain(times).any(|v| !v.is_finite()) {
        return Err(Error::arg("non-finite value in series or times"));
    }
    Ok((times[times.len() - 1] - times[0]) / (times.len() - 1) as f64)
}

/// Least-squares Fourier fit with a searched fundamental frequency.
pub fn fourier_fit(series: &[f64], times: &[f64], order: usize) -> Result<FourierFit> {
    let dt = check_times(series, times, order)?;
    let n = series.len() as f64;
    let omega_max = std::f64::consts::PI / dt;
    let step = omega_max / GRID_POINTS as f64;
    let mean = series.iter().sum::<f64>() / n;

    if series.iter().all(|&v| v == series[0]) {
        return Ok(FourierFit {
            order,
            a0: series[0],
            a1: 0.0,
            b1: 0.0,
            a2: (order == 2).then_some(0.0),
            b2: (order == 2).then_some(0.0),
            omega: step,
            fit_rms: 0.0,
            r_squared: 1.0,
        });
    }

    let y = DVector::from_column_slice(series);
    let cost = |w: f64| linear_fit(&y, times, w, order).map(|f| f.ss_res);

    let mut best = (1, f64::INFINITY);
    for j in 1..=GRID_POINTS {
        let c = cost(j as f64 * step)?;
        if c < best.1 {
            best = (j, c);
        }
    }
    let centre = best.0 as f64 * step;
    let mut lo = if best.0 == 1 { 0.5 * step } else { centre - step };
    let mut hi = (centre + step).min(omega_max);

    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = cost(x1)?;
    let mut f2 = cost(x2)?;
    for _ in 0..200 {
        if hi - lo <= GOLDEN_REL_TOL * 0.5 * (hi + lo) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = cost(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = cost(x2)?;
        }
    }
    let (mut omega, mut ss) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if best.1 < ss {
        (omega, ss) = (centre, best.1);
    }

    let fit = linear_fit(&y, times, omega, order)?;
    let ss_tot: f64 = series.iter().map(|v| (v - mean) * (v - mean)).sum();
    let c = &fit.coefs;
    debug!("fourier fit: omega {omega:.6e}, ss_res {ss:.3e}");
    Ok(FourierFit {
        order,
        a0: c[0],
        a1: c[1],
        b1: c[2],
        a2: c.get(3).copied(),
        b2: c.get(4).copied(),
        omega,
        fit_rms: (fit.ss_res / n).sqrt(),
        r_squared: r_squared_from_sums(fit.ss_res, ss_tot),
    })
}

fn r_squared_from_sums(ss_res: f64, ss_tot: f64) -> f64 {
    if ss_tot == 0.0 {
        debug!("R² of a constant series: 1 if the model is exact, else 0");
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(series: &[f64], model_values: &[f64]) -> Result<f64> {
    if series.len() != model_values.len() {
        return Err(Error::arg(format!("{} values but {} model values", series.len(), model_values.len())));
    }
    if series.len() < 2 {
        return Err(Error::arg("R² needs at least two points"));
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let ss_tot = series.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ss_res = series.iter().zip(model_values).map(|(v, m)| (v - m) * (v - m)).sum();
    Ok(r_squared_from_sums(ss_res, ss_tot))
}

/// Fits all three parameter functions of a schedule at their default orders.
pub fn fit_schedule(schedule: &ParameterSchedule) -> Result<Vec<(Param, FourierFit)>> {
    let times = schedule.grid().times();
    Param::ALL
        .iter()
        .map(|&p| fourier_fit(schedule.series(p), &times, default_order(p)).map(|f| (p, f)))
        .collect()
}

/// Where the perturbation of a sweep enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseChannel {
    /// Magnitude and phase perturbation of the density matrix, both at the
    /// sweep amplitude ("total noise").
    Density,
    /// Perturbation of K, ε and ζ.
    Hamiltonian,
}

impl NoiseChannel {
    pub fn config(self, amplitude: f64, seed: u64) -> Result<NoiseConfig> {
        match self {
            NoiseChannel::Density => NoiseConfig::total(amplitude, seed),
            NoiseChannel::Hamiltonian => NoiseConfig::hamiltonian_only(amplitude, seed),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepTask {
    pub grid: TimeGrid,
    pub learn: LearnConfig,
    pub channel: NoiseChannel,
}

/// Noiseless training up the bootstrap chain: entry `i` is the schedule
/// trained at `n = i + 2`, each started from the previous one.
pub fn clean_chain(grid: TimeGrid, learn: &LearnConfig, n_max: usize) -> Result<Vec<TrainingReport>> {
    let mut out: Vec<TrainingReport> = Vec::new();
    for n in 2..=n_max {
        let init = match out.last() {
            None => default_initial_schedule(grid, learn.init_seed, learn.init_jitter)?,
            Some(prev) => bootstrap(&prev.schedule, n - 1, n)?,
        };
        let report = learning::train(&init, &training_set(n)?, n, learn, None)
            .map_err(|e| e.in_cell(format!("noiseless training at n={n}")))?;
        out.push(report);
    }
    Ok(out)
}

/// Start schedule for training at size `n`: the default initialization at
/// n = 2, otherwise the noiseless (n−1)-qubit result bootstrapped up.
pub fn start_schedule(grid: TimeGrid, learn: &LearnConfig, chain: &[TrainingReport], n: usize) -> Result<ParameterSchedule> {
    if n == 2 {
        return default_initial_schedule(grid, learn.init_seed, learn.init_jitter);
    }
    let prev = chain
        .get(n - 3)
        .ok_or_else(|| Error::arg(format!("no trained {}-qubit schedule to bootstrap from", n - 1)))?;
    bootstrap(&prev.schedule, n - 1, n)
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub n_qubits: usize,
    pub noise: f64,
    pub seed: u64,
    pub report: TrainingReport,
    pub fits: Vec<(Param, FourierFit)>,
}

fn run_cells(task: &SweepTask, cells: Vec<(usize, f64, u64)>, chain: &[TrainingReport]) -> Result<Vec<SweepCell>> {
    cells
        .into_par_iter()
        .map(|(n, amplitude, seed)| {
            let label = format!("cell n={n} noise={amplitude} seed={seed}");
            let run = || -> Result<SweepCell> {
                let init = start_schedule(task.grid, &task.learn, chain, n)?;
                let noise = task.channel.config(amplitude, seed)?;
                let report = learning::train(&init, &training_set(n)?, n, &task.learn, Some(&noise))?;
                let fits = fit_schedule(&report.schedule)?;
                Ok(SweepCell { n_qubits: n, noise: amplitude, seed, report, fits })
            };
            run().map_err(|e| e.in_cell(label))
        })
        .collect()
}

fn check_grid<T>(name: &str, values: &[T]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::arg(format!("{name} must not be empty")));
    }
    Ok(())
}

/// Trains at every (amplitude, seed) for one register size and fits the
/// resulting functions. Cells come back ordered by amplitude, then seed.
pub fn coefficients_vs_noise(task: &SweepTask, n_qubits: usize, noise_grid: &[f64], seeds: &[u64]) -> Result<Vec<SweepCell>> {
    check_grid("noise grid", noise_grid)?;
    check_grid("seed list", seeds)?;
    let chain = if n_qubits > 2 { clean_chain(task.grid, &task.learn, n_qubits - 1)? } else { Vec::new() };
    let cells = noise_grid.iter().flat_map(|&a| seeds.iter().map(move |&s| (n_qubits, a, s))).collect();
    run_cells(task, cells, &chain)
}

/// Trains at every (size, seed) at one amplitude. Cells come back ordered
/// by size, then seed.
pub fn r2_vs_qubits(task: &SweepTask, qubit_counts: &[usize], total_noise: f64, seeds: &[u64]) -> Result<Vec<SweepCell>> {
    check_grid("qubit counts", qubit_counts)?;
    check_grid("seed list", seeds)?;
    if qubit_counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("qubit counts must be strictly ascending"));
    }
    let n_max = *qubit_counts.last().expect("non-empty");
    let chain = if n_max > 2 { clean_chain(task.grid, &task.learn, n_max - 1)? } else { Vec::new() };
    let cells = qubit_counts.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, total_noise, s))).collect();
    run_cells(task, cells, &chain)
}

fn fmt(v: f64) -> String {
    v.to_string()
}

/// `noise,seed,param,coef_name,value`
pub fn write_coefficients_csv<W: Write>(cells: &[SweepCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["noise", "seed", "param", "coef_name", "value"])?;
    for cell in cells {
        for (p, fit) in &cell.fits {
            for (name, v) in fit.coefficients() {
                w.write_record([fmt(cell.noise), cell.seed.to_string(), p.name().into(), name.into(), fmt(v)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `n_qubits,seed,param,r2`
pub fn write_r2_csv<W: Write>(cells: &[SweepCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_qubits", "seed", "param", "r2"])?;
    for cell in cells {
        for (p, fit) in &cell.fits {
            w.write_record([cell.n_qubits.to_string(), cell.seed.to_string(), p.name().into(), fmt(fit.r_squared)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `n_qubits,seed,param,coef_name,value`
pub fn write_qubit_coefficients_csv<W: Write>(cells: &[SweepCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_qubits", "seed", "param", "coef_name", "value"])?;
    for cell in cells {
        for (p, fit) in &cell.fits {
            for (name, v) in fit.coefficients() {
                w.write_record([cell.n_qubits.to_string(), cell.seed.to_string(), p.name().into(), name.into(), fmt(v)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `param,order,a0,a1,b1,a2,b2,omega,fit_rms,r2` (a2, b2 empty for order 1).
pub fn write_fits_csv<W: Write>(fits: &[(Param, FourierFit)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["param", "order", "a0", "a1", "b1", "a2", "b2", "omega", "fit_rms", "r2"])?;
    for (p, f) in fits {
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        w.write_record([
            p.name().to_string(),
            f.order.to_string(),
            fmt(f.a0),
            fmt(f.a1),
            fmt(f.b1),
            opt(f.a2),
            opt(f.b2),
            fmt(f.omega),
            fmt(f.fit_rms),
            fmt(f.r_squared),
        ])?;
    }
    w.flush()?;
    Ok(())
}

//! Hamiltonian assembly and piecewise-constant density-matrix evolution.
//!
//! With shared parameters the Hamiltonian on `n` qubits is
//!
//! ```text
//! H = k Σ_α σx_α + ε Σ_α σz_α + ζ Σ_{α<β} σz_α σz_β
//! ```
//!
//! and each step evolves `ρ ← U ρ U†` with `U = exp(-i H dt)` (ħ = 1).

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Axis, CMatrix, DensityMatrix, Eigen, HermitianOperator};
use crate::noise::{self, NoiseConfig};

pub const MIN_SYSTEM_QUBITS: usize = 2;
pub const MAX_SYSTEM_QUBITS: usize = linalg::MAX_QUBITS;

pub(crate) fn check_system_size(n_qubits: usize) -> Result<()> {
    if !(MIN_SYSTEM_QUBITS..=MAX_SYSTEM_QUBITS).contains(&n_qubits) {
        return Err(Error::arg(format!(
            "n_qubits {n_qubits} outside {MIN_SYSTEM_QUBITS}..={MAX_SYSTEM_QUBITS}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_steps: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { t_final: 251.0, n_steps: 251 }
    }
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::arg(format!("t_final must be > 0, got {t_final}")));
        }
        if n_steps == 0 {
            return Err(Error::arg("n_steps must be >= 1"));
        }
        Ok(Self { t_final, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    /// Start time of each step.
    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n_steps).map(|k| k as f64 * dt).collect()
    }
}

/// Which of the three trainable functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Param {
    K,
    Epsilon,
    Zeta,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::K, Param::Epsilon, Param::Zeta];

    pub fn name(self) -> &'static str {
        match self {
            Param::K => "K",
            Param::Epsilon => "epsilon",
            Param::Zeta => "zeta",
        }
    }
}

/// Per-step values of K, ε and ζ shared by all qubits and pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSchedule {
    grid: TimeGrid,
    k: Vec<f64>,
    eps: Vec<f64>,
    zeta: Vec<f64>,
}

impl ParameterSchedule {
    pub fn new(grid: TimeGrid, k: Vec<f64>, eps: Vec<f64>, zeta: Vec<f64>) -> Result<Self> {
        for (name, s) in [("K", &k), ("epsilon", &eps), ("zeta", &zeta)] {
            if s.len() != grid.n_steps {
                return Err(Error::arg(format!(
                    "{name} series has {} values, grid has {} steps",
                    s.len(),
                    grid.n_steps
                )));
            }
            if let Some(pos) = s.iter().position(|v| !v.is_finite()) {
                return Err(Error::arg(format!("{name}[{pos}] is not finite")));
            }
        }
        Ok(Self { grid, k, eps, zeta })
    }

    pub fn constant(grid: TimeGrid, k: f64, eps: f64, zeta: f64) -> Result<Self> {
        let n = grid.n_steps;
        Self::new(grid, vec![k; n], vec![eps; n], vec![zeta; n])
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        let n = grid.n_steps;
        Self { grid, k: vec![0.0; n], eps: vec![0.0; n], zeta: vec![0.0; n] }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    pub fn series(&self, p: Param) -> &[f64] {
        match p {
            Param::K => &self.k,
            Param::Epsilon => &self.eps,
            Param::Zeta => &self.zeta,
        }
    }

    pub(crate) fn series_mut(&mut self, p: Param) -> &mut [f64] {
        match p {
            Param::K => &mut self.k,
            Param::Epsilon => &mut self.eps,
            Param::Zeta => &mut self.zeta,
        }
    }

    pub fn step(&self, k: usize) -> (f64, f64, f64) {
        (self.k[k], self.eps[k], self.zeta[k])
    }

    /// `self - rate * grad`, component-wise.
    pub fn descend(&self, grad: &StepGradients, rate: f64) -> Result<Self> {
        let mut next = self.clone();
        for p in Param::ALL {
            for (v, g) in next.series_mut(p).iter_mut().zip(grad.series(p)) {
                *v -= rate * g;
            }
        }
        Self::new(next.grid, next.k, next.eps, next.zeta)
    }

    /// Writes the `step,t,K,epsilon,zeta` table. Values use the shortest
    /// representation that round-trips exactly.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "t", "K", "epsilon", "zeta"])?;
        for (i, t) in self.grid.times().into_iter().enumerate() {
            w.write_record([
                i.to_string(),
                t.to_string(),
                self.k[i].to_string(),
                self.eps[i].to_string(),
                self.zeta[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the table written by [`write_csv`](Self::write_csv); lines
    /// starting with `#` are skipped. The grid is recovered from the step
    /// count and spacing.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let headers = r.headers()?.clone();
        let expected = ["step", "t", "K", "epsilon", "zeta"];
        if headers.iter().ne(expected.iter().copied()) {
            return Err(Error::arg(format!(
                "schedule header {:?} != {:?}",
                headers.iter().collect::<Vec<_>>(),
                expected
            )));
        }
        let (mut t, mut k, mut eps, mut zeta) = (vec![], vec![], vec![], vec![]);
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| -> Result<f64> {
                rec[i].trim().parse::<f64>().map_err(|e| {
                    Error::arg(format!("schedule row {row}, column {}: {e}", expected[i]))
                })
            };
            let step: usize = rec[0]
                .trim()
                .parse()
                .map_err(|e| Error::arg(format!("schedule row {row}, step: {e}")))?;
            if step != row {
                return Err(Error::arg(format!("schedule row {row} has step {step}")));
            }
            t.push(field(1)?);
            k.push(field(2)?);
            eps.push(field(3)?);
            zeta.push(field(4)?);
        }
        let n = k.len();
        if n == 0 {
            return Err(Error::arg("schedule has no rows"));
        }
        if n < 2 {
            return Err(Error::arg("cannot infer the time step from a single-row schedule"));
        }
        let dt = t[1] - t[0];
        let grid = TimeGrid::new(dt * n as f64, n)?;
        Self::new(grid, k, eps, zeta)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Per-step derivatives with respect to each schedule entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepGradients {
    pub k: Vec<f64>,
    pub eps: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl StepGradients {
    pub fn zeros(n_steps: usize) -> Self {
        Self { k: vec![0.0; n_steps], eps: vec![0.0; n_steps], zeta: vec![0.0; n_steps] }
    }

    pub fn series(&self, p: Param) -> &[f64] {
        match p {
            Param::K => &self.k,
            Param::Epsilon => &self.eps,
            Param::Zeta => &self.zeta,
        }
    }

    pub fn series_mut(&mut self, p: Param) -> &mut [f64] {
        match p {
            Param::K => &mut self.k,
            Param::Epsilon => &mut self.eps,
            Param::Zeta => &mut self.zeta,
        }
    }

    pub fn add_assign(&mut self, other: &StepGradients) {
        for p in Param::ALL {
            for (a, b) in self.series_mut(p).iter_mut().zip(other.series(p)) {
                *a += b;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        Param::ALL
            .iter()
            .flat_map(|&p| self.series(p).iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The three generators Σσx, Σσz and Σ_{α<β} σzσz for a register.
#[derive(Debug, Clone)]
pub struct Generators {
    n_qubits: usize,
    pub x_sum: CMatrix,
    pub z_sum: CMatrix,
    pub zz_sum: CMatrix,
}

impl Generators {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_system_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut x_sum = CMatrix::zeros(dim, dim);
        let mut z_sum = CMatrix::zeros(dim, dim);
        let mut zz_sum = CMatrix::zeros(dim, dim);
        let zs: Vec<CMatrix> = (0..n_qubits)
            .map(|q| linalg::pauli_on(Axis::Z, q, n_qubits).map(|p| p.elements().clone()))
            .collect::<Result<_>>()?;
        for q in 0..n_qubits {
            x_sum += linalg::pauli_on(Axis::X, q, n_qubits)?.elements();
            z_sum += &zs[q];
            for r in q + 1..n_qubits {
                zz_sum += &zs[q] * &zs[r];
            }
        }
        Ok(Self { n_qubits, x_sum, z_sum, zz_sum })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, p: Param) -> &CMatrix {
        match p {
            Param::K => &self.x_sum,
            Param::Epsilon => &self.z_sum,
            Param::Zeta => &self.zz_sum,
        }
    }

    pub fn hamiltonian(&self, k: f64, eps: f64, zeta: f64) -> HermitianOperator {
        let h = &self.x_sum * Complex64::new(k, 0.0)
            + &self.z_sum * Complex64::new(eps, 0.0)
            + &self.zz_sum * Complex64::new(zeta, 0.0);
        HermitianOperator::from_trusted(h)
    }
}

pub fn build_hamiltonian(k: f64, eps: f64, zeta: f64, n_qubits: usize) -> Result<HermitianOperator> {
    Ok(Generators::new(n_qubits)?.hamiltonian(k, eps, zeta))
}

/// `exp(-i H dt)` together with the eigenbasis it was built from.
#[derive(Debug, Clone)]
pub struct StepPropagator {
    pub eigen: Eigen,
    pub dt: f64,
    pub unitary: CMatrix,
}

impl StepPropagator {
    pub fn new(h: &HermitianOperator, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::arg(format!("dt must be > 0, got {dt}")));
        }
        let eigen = linalg::hermitian_eigen(h);
        let v = &eigen.vectors;
        let mut scaled = v.clone();
        for (j, &lambda) in eigen.values.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -lambda * dt);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
        let unitary = scaled * v.adjoint();
        Ok(Self { eigen, dt, unitary })
    }

    /// U ρ U†.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        &self.unitary * rho * self.unitary.adjoint()
    }
}

pub fn step_unitary(h: &HermitianOperator, dt: f64) -> Result<CMatrix> {
    Ok(StepPropagator::new(h, dt)?.unitary)
}

/// Propagators for every step of a noiseless schedule.
pub fn schedule_propagators(schedule: &ParameterSchedule, gens: &Generators) -> Result<Vec<StepPropagator>> {
    let dt = schedule.grid().dt();
    (0..schedule.n_steps())
        .map(|k| {
            let (kk, e, z) = schedule.step(k);
            StepPropagator::new(&gens.hamiltonian(kk, e, z), dt)
        })
        .collect()
}

/// Noise realization for one propagation.
#[derive(Debug, Clone, Copy)]
pub struct NoiseRun<'a> {
    pub cfg: &'a NoiseConfig,
    /// Distinguishes independent realizations under the same seed.
    pub run_id: u64,
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub final_state: DensityMatrix,
    /// `trajectory[0]` is the input and `trajectory[k + 1]` the state after
    /// step `k`; present only when requested.
    pub trajectory: Option<Vec<DensityMatrix>>,
}

/// Full propagation record used by the gradient engine.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub states: Vec<CMatrix>,
    /// Present only when the step operators differ from the shared noiseless
    /// ones (Hamiltonian noise).
    pub own_steps: Option<Vec<StepPropagator>>,
}

/// Core loop shared by [`propagate`] and the learning module.
///
/// `shared` holds precomputed noiseless propagators; they are used unless
/// Hamiltonian noise is active.
pub(crate) fn evolve(
    rho0: &CMatrix,
    schedule: &ParameterSchedule,
    gens: &Generators,
    shared: Option<&[StepPropagator]>,
    noise: Option<NoiseRun<'_>>,
    record: bool,
) -> Result<Trace> {
    let n_steps = schedule.n_steps();
    let dt = schedule.grid().dt();
    let noise = noise.filter(|n| !n.cfg.is_silent());
    let ham_noise = noise.is_some_and(|n| n.cfg.hamiltonian_active());

    let mut states = Vec::with_capacity(if record { n_steps + 1 } else { 1 });
    let mut own_steps = (ham_noise && record).then(|| Vec::with_capacity(n_steps));
    let mut rho = rho0.clone();
    if record {
        states.push(rho.clone());
    }
    for k in 0..n_steps {
        let mut rng = noise.map(|n| noise::rng_stream_for(n.cfg.seed, n.run_id, k as u64));
        let fresh;
        let step: &StepPropagator = match (ham_noise, shared) {
            (false, Some(s)) => &s[k],
            _ => {
                let (mut kk, mut e, mut z) = schedule.step(k);
                if let (Some(n), Some(r)) = (noise, rng.as_mut()) {
                    (kk, e, z) = noise::perturb_parameters(kk, e, z, n.cfg, r);
                }
                fresh = StepPropagator::new(&gens.hamiltonian(kk, e, z), dt)?;
                &fresh
            }
        };
        rho = step.apply(&rho);
        if let (Some(n), Some(r)) = (noise, rng.as_mut()) {
            if n.cfg.density_active() {
                rho = linalg::project_physical(&noise::perturb_elements(&rho, n.cfg, r))?.into_elements();
            }
        }
        if let Some(own) = own_steps.as_mut() {
            own.push(step.clone());
        }
        if record {
            states.push(rho.clone());
        }
    }
    if !record {
        states.push(rho);
    }
    Ok(Trace { states, own_steps })
}

/// Evolves `rho0` through every step of `schedule`, applying Hamiltonian
/// noise before and density-matrix noise after each unitary step.
pub fn propagate(
    rho0: &DensityMatrix,
    schedule: &ParameterSchedule,
    n_qubits: usize,
    noise: Option<NoiseRun<'_>>,
    record_trajectory: bool,
) -> Result<Propagation> {
    if rho0.n_qubits() != n_qubits {
        return Err(Error::arg(format!(
            "state has {} qubits, expected {n_qubits}",
            rho0.n_qubits()
        )));
    }
    let gens = Generators::new(n_qubits)?;
    let trace = evolve(rho0.elements(), schedule, &gens, None, noise, record_trajectory)?;
    let mut states = trace.states;
    let final_state = DensityMatrix::from_trusted(states.last().cloned().expect("at least one state"));
    let trajectory = record_trajectory
        .then(|| states.drain(..).map(DensityMatrix::from_trusted).collect());
    Ok(Propagation { final_state, trajectory })
}

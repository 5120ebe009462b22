//! Gradient-descent training of parameter schedules.
//!
//! The loss over a set of training pairs is `L = ½ Σ_p (y_p − t_p)²` where
//! `y_p` is the squared final-time expectation of the pair's observable. Its
//! gradient with respect to every per-step value of K, ε and ζ is computed by
//! a forward sweep that stores the states and a backward sweep of the adjoint
//! `Λ_k = U_k† Λ_{k+1} U_k`, starting from `Λ_final = 2 e (y − t) O`.
//!
//! The derivative of `U = exp(−iH dt)` in a generator direction `G` is taken
//! in the eigenbasis of `H` (`H = V diag(λ) V†`):
//!
//! ```text
//! dU = V (F ∘ V†GV) V†,   F_ab = (f(λ_a) − f(λ_b)) / (λ_a − λ_b),  f(λ) = e^{−iλ dt}
//! ```
//!
//! so that `∂L/∂θ_k = 2 Re Tr(G · V (F ∘ V† B V) V†)` with
//! `B = ρ_k U_k† Λ_{k+1}`.

use log::{info, warn};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    self, evolve, schedule_propagators, Generators, NoiseRun, Param, ParameterSchedule, StepGradients,
    StepPropagator, TimeGrid,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, DensityMatrix};
use crate::noise::{self, NoiseConfig};
use crate::witness::{TrainingPair, WitnessObservable};

/// Initial values of K, ε and ζ before jitter.
pub const DEFAULT_INIT: (f64, f64, f64) = (0.002, 0.0001, 0.0002);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    Adjoint,
    FiniteDifference,
}

/// Which forward trajectory the adjoint runs along when training with noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoisyGradient {
    /// A separate noiseless trajectory. Noise then enters only through the
    /// reported loss and the stopping rule.
    Clean,
    /// The noisy trajectory actually realized in the epoch, with the noise
    /// draws held fixed (not differentiated).
    Realized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub rms_stop: f64,
    pub gradient_mode: GradientMode,
    pub noisy_gradient: NoisyGradient,
    /// Seed of the initial-schedule jitter; independent of the noise seed.
    pub init_seed: u64,
    /// Relative half-width of the uniform jitter applied to each initial series.
    pub init_jitter: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            max_epochs: 500,
            rms_stop: 1e-3,
            gradient_mode: GradientMode::Adjoint,
            noisy_gradient: NoisyGradient::Clean,
            init_seed: 0,
            init_jitter: 0.1,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learn.rate", format!("must be > 0, got {}", self.learning_rate)));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("learn.max_epochs", "must be >= 1"));
        }
        if !(self.rms_stop.is_finite() && self.rms_stop >= 0.0) {
            return Err(Error::config("learn.rms_stop", format!("must be >= 0, got {}", self.rms_stop)));
        }
        if !(self.init_jitter.is_finite() && (0.0..1.0).contains(&self.init_jitter)) {
            return Err(Error::config("learn.init_jitter", format!("must be in [0, 1), got {}", self.init_jitter)));
        }
        Ok(())
    }
}

/// Constant series at [`DEFAULT_INIT`], each scaled by its own factor
/// `1 + u`, `u` uniform in `[−jitter, jitter]`.
pub fn default_initial_schedule(grid: TimeGrid, init_seed: u64, jitter: f64) -> Result<ParameterSchedule> {
    let mut rng = noise::rng_stream_for(init_seed, u64::MAX, 0);
    let mut scaled = |v: f64| v * (1.0 + jitter * (2.0 * rng.random::<f64>() - 1.0));
    let (k, e, z) = DEFAULT_INIT;
    ParameterSchedule::constant(grid, scaled(k), scaled(e), scaled(z))
}

/// Transfers a trained schedule to a register one qubit larger. Shared
/// symmetric parameters carry over unchanged.
pub fn bootstrap(schedule_small: &ParameterSchedule, n_from: usize, n_to: usize) -> Result<ParameterSchedule> {
    dynamics::check_system_size(n_from)?;
    dynamics::check_system_size(n_to)?;
    if n_to != n_from + 1 {
        return Err(Error::arg(format!("bootstrap goes from n to n+1, got {n_from} -> {n_to}")));
    }
    Ok(schedule_small.clone())
}

fn rms_of(outputs: &[f64], targets: &[f64]) -> f64 {
    let sq: f64 = outputs.iter().zip(targets).map(|(y, t)| (y - t) * (y - t)).sum();
    (sq / outputs.len().max(1) as f64).sqrt()
}

/// Training pairs prepared for repeated evaluation on one register size.
#[derive(Debug, Clone)]
pub struct Task {
    n_qubits: usize,
    pairs: Vec<TrainingPair>,
    observables: Vec<WitnessObservable>,
    gens: Generators,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub outputs: Vec<f64>,
    pub rms: f64,
    pub gradient: Option<StepGradients>,
    /// rms on the trajectory the gradient was taken along.
    pub gradient_rms: Option<f64>,
}

struct PairPass {
    output: f64,
    /// Output on the gradient trajectory, with that pair's gradient.
    gradient: Option<(f64, StepGradients)>,
}

impl Task {
    pub fn new(pairs: Vec<TrainingPair>, n_qubits: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::arg("no training pairs"));
        }
        if let Some(p) = pairs.iter().find(|p| p.n_qubits() != n_qubits) {
            return Err(Error::arg(format!(
                "pair {} has {} qubits, expected {n_qubits}",
                p.label,
                p.n_qubits()
            )));
        }
        let observables = pairs.iter().map(TrainingPair::observable).collect::<Result<_>>()?;
        Ok(Self { n_qubits, pairs, observables, gens: Generators::new(n_qubits)? })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn pairs(&self) -> &[TrainingPair] {
        &self.pairs
    }

    pub fn targets(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.target).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.pairs.iter().map(|p| p.label.clone()).collect()
    }

    fn check_schedule(&self, schedule: &ParameterSchedule) -> Result<()> {
        if schedule.n_steps() == 0 {
            return Err(Error::arg("empty schedule"));
        }
        Ok(())
    }

    /// Outputs and rms; with `noise`, realization `realization` is drawn
    /// (one independent stream per pair). With `with_gradient`, also the
    /// gradient of `½ Σ (y − t)²`.
    pub fn evaluate(
        &self,
        schedule: &ParameterSchedule,
        noise: Option<&NoiseConfig>,
        realization: u64,
        with_gradient: Option<NoisyGradient>,
    ) -> Result<Evaluation> {
        self.check_schedule(schedule)?;
        let noise = noise.filter(|n| !n.is_silent());
        let needs_shared = noise.is_none_or(|n| !n.hamiltonian_active())
            || matches!(with_gradient, Some(NoisyGradient::Clean));
        let shared = if needs_shared { Some(schedule_propagators(schedule, &self.gens)?) } else { None };
        let shared = shared.as_deref();

        let per_pair: Vec<PairPass> = (0..self.pairs.len())
            .into_par_iter()
            .map(|i| self.pair_pass(i, schedule, shared, noise, realization, with_gradient))
            .collect::<Result<_>>()?;

        let targets = self.targets();
        let outputs: Vec<f64> = per_pair.iter().map(|p| p.output).collect();
        let rms = rms_of(&outputs, &targets);
        let (gradient, gradient_rms) = if with_gradient.is_some() {
            let mut total = StepGradients::zeros(schedule.n_steps());
            let mut grad_outputs = Vec::with_capacity(per_pair.len());
            for pass in &per_pair {
                let (y, g) = pass.gradient.as_ref().ok_or_else(|| Error::Internal("pair gradient missing".into()))?;
                grad_outputs.push(*y);
                total.add_assign(g);
            }
            (Some(total), Some(rms_of(&grad_outputs, &targets)))
        } else {
            (None, None)
        };
        Ok(Evaluation { outputs, rms, gradient, gradient_rms })
    }

    fn pair_pass(
        &self,
        index: usize,
        schedule: &ParameterSchedule,
        shared: Option<&[StepPropagator]>,
        noise: Option<&NoiseConfig>,
        realization: u64,
        with_gradient: Option<NoisyGradient>,
    ) -> Result<PairPass> {
        let pair = &self.pairs[index];
        let obs = &self.observables[index];
        let run = noise.map(|cfg| NoiseRun { cfg, run_id: (realization << 24) | index as u64 });
        let record_main = with_gradient.is_some() && (run.is_none() || with_gradient == Some(NoisyGradient::Realized));
        let trace = evolve(pair.input.elements(), schedule, &self.gens, shared, run, record_main)?;
        let final_state = DensityMatrix::from_trusted(trace.states.last().expect("non-empty").clone());
        let e = linalg::expectation(&final_state, obs.operator())?;
        let y = e * e;
        let Some(mode) = with_gradient else {
            return Ok(PairPass { output: y, gradient: None });
        };
        let clean_trace;
        let (states, steps, e_grad) = if record_main {
            let steps = trace.own_steps.as_deref().or(shared).ok_or_else(|| {
                Error::Internal("missing step propagators for the adjoint sweep".into())
            })?;
            (&trace.states, steps, e)
        } else {
            debug_assert_eq!(mode, NoisyGradient::Clean);
            clean_trace = evolve(pair.input.elements(), schedule, &self.gens, shared, None, true)?;
            let last = DensityMatrix::from_trusted(clean_trace.states.last().expect("non-empty").clone());
            let e_clean = linalg::expectation(&last, obs.operator())?;
            let steps = shared.ok_or_else(|| Error::Internal("missing noiseless propagators".into()))?;
            (&clean_trace.states, steps, e_clean)
        };
        if states.len() != steps.len() + 1 {
            return Err(Error::Internal("trajectory length does not match the step count".into()));
        }
        let y_grad = e_grad * e_grad;
        let scale = 2.0 * e_grad * (y_grad - pair.target);
        let lambda = obs.operator().elements() * Complex64::new(scale, 0.0);
        let grad = adjoint_sweep(&self.gens, steps, states, lambda);
        Ok(PairPass { output: y, gradient: Some((y_grad, grad)) })
    }

    pub fn loss(&self, schedule: &ParameterSchedule) -> Result<f64> {
        let eval = self.evaluate(schedule, None, 0, None)?;
        Ok(0.5 * eval.rms * eval.rms * self.pairs.len() as f64)
    }
}

/// Divided differences of `λ ↦ e^{−iλ dt}` over all eigenvalue pairs,
/// written as `−i dt e^{−i λ̄ dt} sinc(Δλ dt / 2)` to stay accurate for
/// (near-)degenerate eigenvalues.
fn divided_differences(values: &[f64], dt: f64) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |a, b| {
        let mean = 0.5 * (values[a] + values[b]);
        let half = 0.5 * (values[a] - values[b]) * dt;
        let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
        Complex64::new(0.0, -dt) * Complex64::from_polar(sinc, -mean * dt)
    })
}

fn adjoint_sweep(gens: &Generators, steps: &[StepPropagator], states: &[CMatrix], lambda_final: CMatrix) -> StepGradients {
    let n_steps = steps.len();
    let mut grad = StepGradients::zeros(n_steps);
    let mut lambda = lambda_final;
    for k in (0..n_steps).rev() {
        let step = &steps[k];
        let v = &step.eigen.vectors;
        let u_dag = step.unitary.adjoint();
        let b = &states[k] * &u_dag * &lambda;
        let b_eig = v.adjoint() * b * v;
        let f = divided_differences(&step.eigen.values, step.dt);
        let m = f.component_mul(&b_eig);
        let w = v * m * v.adjoint();
        for p in Param::ALL {
            grad.series_mut(p)[k] = 2.0 * linalg::trace_of_product(gens.get(p), &w).re;
        }
        lambda = &u_dag * lambda * &step.unitary;
    }
    grad
}

/// Propagates every pair with `schedule` and returns `(rms, outputs)`.
/// With noise, `realization` selects the draw (fresh per pair).
pub fn loss_and_outputs(
    schedule: &ParameterSchedule,
    pairs: &[TrainingPair],
    n_qubits: usize,
    noise: Option<&NoiseConfig>,
    realization: u64,
) -> Result<(f64, Vec<f64>)> {
    let task = Task::new(pairs.to_vec(), n_qubits)?;
    let eval = task.evaluate(schedule, noise, realization, None)?;
    Ok((eval.rms, eval.outputs))
}

/// Exact noiseless gradient of `½ Σ (y − t)²` by the adjoint method.
pub fn gradient(schedule: &ParameterSchedule, pairs: &[TrainingPair], n_qubits: usize) -> Result<StepGradients> {
    let task = Task::new(pairs.to_vec(), n_qubits)?;
    adjoint_gradient(&task, schedule)
}

pub fn adjoint_gradient(task: &Task, schedule: &ParameterSchedule) -> Result<StepGradients> {
    task.evaluate(schedule, None, 0, Some(NoisyGradient::Clean))?
        .gradient
        .ok_or_else(|| Error::Internal("gradient missing".into()))
}

/// Central finite differences of the noiseless loss, step `h` per entry.
pub fn finite_difference_gradient(task: &Task, schedule: &ParameterSchedule, h: f64) -> Result<StepGradients> {
    let n = schedule.n_steps();
    let coords: Vec<(Param, usize)> = Param::ALL.iter().flat_map(|&p| (0..n).map(move |k| (p, k))).collect();
    let values: Vec<f64> = coords
        .par_iter()
        .map(|&(p, k)| {
            let mut plus = schedule.clone();
            plus.series_mut(p)[k] += h;
            let mut minus = schedule.clone();
            minus.series_mut(p)[k] -= h;
            Ok((task.loss(&plus)? - task.loss(&minus)?) / (2.0 * h))
        })
        .collect::<Result<_>>()?;
    let mut grad = StepGradients::zeros(n);
    for ((p, k), v) in coords.into_iter().zip(values) {
        grad.series_mut(p)[k] = v;
    }
    Ok(grad)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainingReport {
    /// Number of gradient updates applied.
    pub epochs_run: usize,
    /// rms at the start, before any update.
    pub initial_rms: f64,
    /// rms after each update (noisy when training with noise).
    pub rms_history: Vec<f64>,
    /// Outputs of the final schedule, from the same evaluation as the last
    /// `rms_history` entry (or the initial one when no update ran).
    pub final_outputs: Vec<f64>,
    pub final_rms: f64,
    /// Noiseless rms of the final schedule.
    pub noiseless_rms: f64,
    pub targets: Vec<f64>,
    pub labels: Vec<String>,
    pub learning_rate: f64,
    pub rate_halvings: usize,
    #[serde(skip)]
    pub schedule: ParameterSchedule,
}

impl TrainingReport {
    /// Number of updates after which the rms first reached `threshold`
    /// (0 if the start already did).
    pub fn epochs_to_reach(&self, threshold: f64) -> Option<usize> {
        if self.initial_rms <= threshold {
            return Some(0);
        }
        self.rms_history.iter().position(|&r| r <= threshold).map(|i| i + 1)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "epochs": self.epochs_run,
            "initial_rms": self.initial_rms,
            "rms_history": self.rms_history,
            "outputs": self.final_outputs,
            "targets": self.targets,
            "labels": self.labels,
            "final_rms": self.final_rms,
            "noiseless_rms": self.noiseless_rms,
            "learning_rate": self.learning_rate,
            "rate_halvings": self.rate_halvings,
        })
    }
}

const DIVERGENCE_FACTOR: f64 = 10.0;
const DIVERGENCE_PATIENCE: usize = 10;
const MAX_HALVINGS_PER_EPOCH: usize = 40;

/// Full-batch gradient descent from `initial`.
///
/// An update that raises the noiseless rms is undone and retried with half
/// the rate, so without noise `rms_history` never increases. With noise each
/// epoch evaluates a fresh realization (`rng_stream_for(seed, epoch·2^24 + pair, step)`);
/// when the gradient follows the realized noisy path there is no backtracking.
pub fn train(
    initial: &ParameterSchedule,
    pairs: &[TrainingPair],
    n_qubits: usize,
    learn: &LearnConfig,
    noise: Option<&NoiseConfig>,
) -> Result<TrainingReport> {
    learn.validate()?;
    let task = Task::new(pairs.to_vec(), n_qubits)?;
    train_task(&task, initial, learn, noise)
}

pub fn train_task(
    task: &Task,
    initial: &ParameterSchedule,
    learn: &LearnConfig,
    noise: Option<&NoiseConfig>,
) -> Result<TrainingReport> {
    learn.validate()?;
    let noise = noise.filter(|n| !n.is_silent());
    if let Some(n) = noise {
        n.validate()?;
    }
    let grad_path = match learn.gradient_mode {
        GradientMode::Adjoint => Some(learn.noisy_gradient),
        GradientMode::FiniteDifference => None,
    };
    let evaluate = |sched: &ParameterSchedule, epoch: usize| -> Result<Evaluation> {
        let mut eval = task.evaluate(sched, noise, epoch as u64, grad_path)?;
        if learn.gradient_mode == GradientMode::FiniteDifference {
            eval.gradient = Some(finite_difference_gradient(task, sched, 1e-5)?);
            eval.gradient_rms =
                Some(if noise.is_some() { task.evaluate(sched, None, 0, None)?.rms } else { eval.rms });
        }
        Ok(eval)
    };
    // Steps are accepted or backtracked on the noiseless loss of the path
    // the gradient came from; a realized noisy path has no such reference.
    let backtracks = noise.is_none() || learn.noisy_gradient == NoisyGradient::Clean;
    let guide = |e: &Evaluation| e.gradient_rms.unwrap_or(e.rms);

    let mut schedule = initial.clone();
    let mut rate = learn.learning_rate;
    let mut halvings = 0;
    let mut current = evaluate(&schedule, 0)?;
    let initial_rms = current.rms;
    let mut history = Vec::new();
    let mut above = 0;

    'epochs: while history.len() < learn.max_epochs && current.rms > learn.rms_stop {
        let epoch = history.len() + 1;
        let grad = current.gradient.take().ok_or_else(|| Error::Internal("gradient missing".into()))?;
        let mut tries = 0;
        let next = loop {
            let candidate = schedule.descend(&grad, rate)?;
            let eval = evaluate(&candidate, epoch)?;
            if !backtracks || guide(&eval) <= guide(&current) {
                break (candidate, eval);
            }
            tries += 1;
            if tries > MAX_HALVINGS_PER_EPOCH {
                info!("no descent found at epoch {epoch}; stopping at rms {:.3e}", current.rms);
                current.gradient = Some(grad);
                break 'epochs;
            }
            rate *= 0.5;
            halvings += 1;
            warn!("rms rose at epoch {epoch}; halving learning rate to {rate:.3e}");
        };
        (schedule, current) = next;
        history.push(current.rms);
        if current.rms > DIVERGENCE_FACTOR * initial_rms {
            above += 1;
            if above >= DIVERGENCE_PATIENCE {
                return Err(Error::Divergence { epoch, rms: current.rms, initial: initial_rms });
            }
        } else {
            above = 0;
        }
    }

    let noiseless_rms = if noise.is_some() { task.evaluate(&schedule, None, 0, None)?.rms } else { current.rms };
    Ok(TrainingReport {
        epochs_run: history.len(),
        initial_rms,
        final_rms: current.rms,
        rms_history: history,
        final_outputs: current.outputs,
        noiseless_rms,
        targets: task.targets(),
        labels: task.labels(),
        learning_rate: rate,
        rate_halvings: halvings,
        schedule,
    })
}

//! Task dispatch for the command-line tool.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;

use crate::analysis::{self, fit_schedule, NoiseChannel, SweepCell, SweepTask};
use crate::dynamics::{propagate, NoiseRun, ParameterSchedule};
use crate::error::{Error, Result};
use crate::learning::{self, bootstrap, default_initial_schedule, TrainingReport};
use crate::witness::{self, test_state_m, test_state_p, test_state_p_oracle, training_set, WitnessObservable};

use super::config::{ExperimentConfig, InitPolicy, StateFamily, TaskKind, OUTPUT_DIR_ENV};
use super::output::{write_csv, write_json};

/// What a run wrote, plus the line printed to standard output.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub line: String,
    pub files: Vec<PathBuf>,
}

/// Output directory from the config, else from the environment.
pub fn output_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    if let Some(p) = &cfg.output {
        return Ok(p.clone());
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(p) if !p.is_empty() => Ok(PathBuf::from(p)),
        _ => Err(Error::config("io.output", format!("no output directory (set io.output or {OUTPUT_DIR_ENV})"))),
    }
}

pub fn run(task: TaskKind, cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = output_dir(cfg)?;
    std::fs::create_dir_all(&dir)?;
    let start = Instant::now();
    let (detail, files) = match task {
        TaskKind::Train => run_train(cfg, &dir)?,
        TaskKind::Test => run_test(cfg, &dir)?,
        TaskKind::SweepNoise => run_sweep_noise(cfg, &dir)?,
        TaskKind::SweepQubits => run_sweep_qubits(cfg, &dir)?,
        TaskKind::Fit => run_fit(cfg, &dir)?,
    };
    let line = format!("{} {detail} wall={:.2}s", task.name(), start.elapsed().as_secs_f64());
    Ok(RunSummary { line, files })
}

/// Start schedule for training at `cfg.n_qubits` under the init policy.
pub fn initial_schedule(cfg: &ExperimentConfig) -> Result<ParameterSchedule> {
    match cfg.init {
        InitPolicy::Fresh => default_initial_schedule(cfg.grid, cfg.learn.init_seed, cfg.learn.init_jitter),
        InitPolicy::Bootstrap => {
            if cfg.n_qubits == 2 {
                return default_initial_schedule(cfg.grid, cfg.learn.init_seed, cfg.learn.init_jitter);
            }
            let chain = analysis::clean_chain(cfg.grid, &cfg.learn, cfg.n_qubits - 1)?;
            let prev = chain.last().expect("chain covers n >= 2");
            bootstrap(&prev.schedule, cfg.n_qubits - 1, cfg.n_qubits)
        }
        InitPolicy::File => load_schedule(cfg),
    }
}

fn load_schedule(cfg: &ExperimentConfig) -> Result<ParameterSchedule> {
    let path = cfg
        .schedule
        .as_ref()
        .ok_or_else(|| Error::config("io.schedule", "no schedule file given"))?;
    ParameterSchedule::load(path)
}

/// The schedule file when one is given, else a noiseless training run.
fn trained_schedule(cfg: &ExperimentConfig) -> Result<ParameterSchedule> {
    if cfg.schedule.is_some() {
        return load_schedule(cfg);
    }
    info!("no io.schedule given; training a {}-qubit schedule first", cfg.n_qubits);
    let init = initial_schedule(cfg)?;
    let report = learning::train(&init, &training_set(cfg.n_qubits)?, cfg.n_qubits, &cfg.learn, None)?;
    Ok(report.schedule)
}

fn active_noise(cfg: &ExperimentConfig) -> Option<&crate::noise::NoiseConfig> {
    (!cfg.noise.is_silent()).then_some(&cfg.noise)
}

fn run_train(cfg: &ExperimentConfig, dir: &Path) -> Result<(String, Vec<PathBuf>)> {
    let init = initial_schedule(cfg)?;
    let pairs = training_set(cfg.n_qubits)?;
    let report = learning::train(&init, &pairs, cfg.n_qubits, &cfg.learn, active_noise(cfg))?;
    let files = write_training_outputs(cfg, dir, &report, &pairs)?;
    let detail = format!("n={} epochs={} rms={:.4e}", cfg.n_qubits, report.epochs_run, report.final_rms);
    Ok((detail, files))
}

fn write_training_outputs(
    cfg: &ExperimentConfig,
    dir: &Path,
    report: &TrainingReport,
    pairs: &[witness::TrainingPair],
) -> Result<Vec<PathBuf>> {
    let sched_path = dir.join("schedule.csv");
    write_csv(&sched_path, TaskKind::Train, cfg, |buf| report.schedule.write_csv(buf))?;
    let report_path = dir.join("report.json");
    write_json(&report_path, TaskKind::Train, cfg, report.to_json())?;
    let pairs_path = dir.join("pairs.json");
    write_json(&pairs_path, TaskKind::Train, cfg, serde_json::json!({ "pairs": witness::training_set_json(pairs) }))?;
    Ok(vec![sched_path, report_path, pairs_path])
}

/// One point of a generalization curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestRow {
    pub gamma: f64,
    pub noise: f64,
    pub seed: u64,
    pub output: f64,
    pub oracle: f64,
}

/// Propagates the family's state at every (γ, noise, seed) and records the
/// output on `subset` next to the reference value: `4/(2+γ²)²` for P, the
/// γ = 0 value 1 for M.
pub fn test_curve(
    schedule: &ParameterSchedule,
    family: StateFamily,
    gammas: &[f64],
    noise_levels: &[f64],
    seeds: &[u64],
    subset: &[usize],
    channel: NoiseChannel,
) -> Result<Vec<TestRow>> {
    const N_QUBITS: usize = 3;
    let obs = WitnessObservable::new(subset, N_QUBITS)?;
    let mut cells = Vec::new();
    for (gi, &gamma) in gammas.iter().enumerate() {
        for &noise in noise_levels {
            for &seed in seeds {
                cells.push((gi, gamma, noise, seed));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(gi, gamma, level, seed)| {
            let (state, oracle) = match family {
                StateFamily::P => (test_state_p(gamma)?, test_state_p_oracle(gamma)),
                StateFamily::M => (test_state_m(gamma)?, 1.0),
            };
            let cfg = channel.config(level, seed)?;
            let run = (!cfg.is_silent()).then_some(NoiseRun { cfg: &cfg, run_id: gi as u64 });
            let prop = propagate(&state, schedule, N_QUBITS, run, false)?;
            let output = witness::output_value(&prop.final_state, &obs)?;
            Ok(TestRow { gamma, noise: level, seed, output, oracle })
        })
        .collect()
}

fn run_test(cfg: &ExperimentConfig, dir: &Path) -> Result<(String, Vec<PathBuf>)> {
    if cfg.n_qubits != 3 {
        return Err(Error::config("system.n_qubits", "the P and M test states are 3-qubit states; set 3"));
    }
    if cfg.observable.len() < 2 || cfg.observable.iter().any(|&q| q >= 3) {
        return Err(Error::config("observable.subset", "needs at least two qubits of the 3-qubit register"));
    }
    let schedule = trained_schedule(cfg)?;
    let t = &cfg.test;
    let rows = test_curve(&schedule, t.family, &t.gammas, &t.noise_levels, &t.seeds, &cfg.observable, t.channel)?;
    let path = dir.join("test_curve.csv");
    write_csv(&path, TaskKind::Test, cfg, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["gamma", "noise", "seed", "output", "oracle"])?;
        for r in &rows {
            w.write_record([r.gamma.to_string(), r.noise.to_string(), r.seed.to_string(), r.output.to_string(), r.oracle.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let worst = rows
        .iter()
        .filter(|r| r.noise == 0.0)
        .map(|r| (r.output - r.oracle).abs())
        .fold(0.0, f64::max);
    Ok((format!("rows={} max_noiseless_gap={worst:.4e}", rows.len()), vec![path]))
}

fn sweep_task(cfg: &ExperimentConfig) -> SweepTask {
    SweepTask { grid: cfg.grid, learn: cfg.learn, channel: cfg.sweep.channel }
}

fn mean_r2(cells: &[SweepCell]) -> f64 {
    let all: Vec<f64> = cells.iter().flat_map(|c| c.fits.iter().map(|(_, f)| f.r_squared)).collect();
    all.iter().sum::<f64>() / all.len().max(1) as f64
}

fn run_sweep_noise(cfg: &ExperimentConfig, dir: &Path) -> Result<(String, Vec<PathBuf>)> {
    if cfg.n_qubits > 3 && !cfg.sweep.long_run {
        return Err(Error::config("system.n_qubits", "noise sweeps above 3 qubits need sweep.long_run = true"));
    }
    let cells = analysis::coefficients_vs_noise(&sweep_task(cfg), cfg.n_qubits, &cfg.sweep.noise_levels, &cfg.sweep.seeds)?;
    let path = dir.join("coefficients.csv");
    write_csv(&path, TaskKind::SweepNoise, cfg, |buf| analysis::write_coefficients_csv(&cells, buf))?;
    Ok((format!("n={} cells={} mean_r2={:.6}", cfg.n_qubits, cells.len(), mean_r2(&cells)), vec![path]))
}

fn run_sweep_qubits(cfg: &ExperimentConfig, dir: &Path) -> Result<(String, Vec<PathBuf>)> {
    if cfg.sweep.qubits.iter().any(|&n| n > 3) && !cfg.sweep.long_run {
        return Err(Error::config("sweep.qubits", "sizes above 3 qubits need sweep.long_run = true"));
    }
    let cells = analysis::r2_vs_qubits(&sweep_task(cfg), &cfg.sweep.qubits, cfg.sweep.total_noise, &cfg.sweep.seeds)?;
    let r2_path = dir.join("r2.csv");
    write_csv(&r2_path, TaskKind::SweepQubits, cfg, |buf| analysis::write_r2_csv(&cells, buf))?;
    let coef_path = dir.join("qubit_coefficients.csv");
    write_csv(&coef_path, TaskKind::SweepQubits, cfg, |buf| analysis::write_qubit_coefficients_csv(&cells, buf))?;
    Ok((format!("cells={} mean_r2={:.6}", cells.len(), mean_r2(&cells)), vec![r2_path, coef_path]))
}

fn run_fit(cfg: &ExperimentConfig, dir: &Path) -> Result<(String, Vec<PathBuf>)> {
    let schedule = trained_schedule(cfg)?;
    let fits = fit_schedule(&schedule)?;
    let path = dir.join("fit.csv");
    write_csv(&path, TaskKind::Fit, cfg, |buf| analysis::write_fits_csv(&fits, buf))?;
    let r2: Vec<String> = fits.iter().map(|(p, f)| format!("r2_{}={:.6}", p.name(), f.r_squared)).collect();
    Ok((r2.join(" "), vec![path]))
}

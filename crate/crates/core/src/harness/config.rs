//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! system.n_qubits = 3
//! noise.phase = 0.0089
//! sweep.seeds = 1, 2, 3
//! ```
//!
//! Every key has a default; unknown keys and malformed values are errors
//! that carry the line number.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use crate::analysis::NoiseChannel;
use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::learning::{GradientMode, LearnConfig, NoisyGradient};
use crate::noise::NoiseConfig;
use crate::witness::{parse_subset, subset_label};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "QNN_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Train,
    Test,
    SweepNoise,
    SweepQubits,
    Fit,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Train => "train",
            TaskKind::Test => "test",
            TaskKind::SweepNoise => "sweep-noise",
            TaskKind::SweepQubits => "sweep-qubits",
            TaskKind::Fit => "fit",
        }
    }
}

impl FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "train" => TaskKind::Train,
            "test" => TaskKind::Test,
            "sweep-noise" => TaskKind::SweepNoise,
            "sweep-qubits" => TaskKind::SweepQubits,
            "fit" => TaskKind::Fit,
            other => return Err(Error::config("task", format!("unknown task '{other}'"))),
        })
    }
}

/// How `train` (and `test`/`fit` without a schedule file) obtains its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitPolicy {
    /// Jittered constants at the target size.
    Fresh,
    /// Noiseless training from 2 qubits up, then one bootstrap step.
    Bootstrap,
    /// The schedule at `io.schedule`.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateFamily {
    P,
    M,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub family: StateFamily,
    pub gammas: Vec<f64>,
    pub noise_levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub channel: NoiseChannel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub noise_levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub qubits: Vec<usize>,
    pub total_noise: f64,
    pub channel: NoiseChannel,
    /// Required for sizes above 3.
    pub long_run: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_qubits: usize,
    pub grid: TimeGrid,
    pub learn: LearnConfig,
    pub init: InitPolicy,
    pub noise: NoiseConfig,
    pub output: Option<PathBuf>,
    pub schedule: Option<PathBuf>,
    pub observable: Vec<usize>,
    pub test: TestConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_qubits: 2,
            grid: TimeGrid::default(),
            learn: LearnConfig::default(),
            init: InitPolicy::Bootstrap,
            noise: NoiseConfig::default(),
            output: None,
            schedule: None,
            observable: vec![1, 2],
            test: TestConfig {
                family: StateFamily::P,
                gammas: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
                noise_levels: vec![0.0, 0.009, 0.018, 0.027],
                seeds: vec![1, 2],
                channel: NoiseChannel::Density,
            },
            sweep: SweepConfig {
                noise_levels: vec![0.0, 0.006_85, 0.0137, 0.020_55, 0.027_41],
                seeds: vec![1, 2, 3, 4, 5],
                qubits: vec![2, 3],
                total_noise: 0.027_41,
                channel: NoiseChannel::Density,
                long_run: false,
            },
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::config(key, format!("cannot parse '{value}': {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn join<T: Display>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn channel_name(c: NoiseChannel) -> &'static str {
    match c {
        NoiseChannel::Density => "density",
        NoiseChannel::Hamiltonian => "hamiltonian",
    }
}

fn parse_channel(key: &str, value: &str) -> Result<NoiseChannel> {
    match value {
        "density" => Ok(NoiseChannel::Density),
        "hamiltonian" => Ok(NoiseChannel::Hamiltonian),
        other => Err(Error::config(key, format!("expected density or hamiltonian, got '{other}'"))),
    }
}

impl ExperimentConfig {
    /// Sets one `section.key` from its textual value.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "system.n_qubits" => self.n_qubits = parse_value(key, v)?,
            "grid.t_final" => self.grid.t_final = parse_value(key, v)?,
            "grid.n_steps" => self.grid.n_steps = parse_value(key, v)?,
            "learn.rate" => self.learn.learning_rate = parse_value(key, v)?,
            "learn.max_epochs" => self.learn.max_epochs = parse_value(key, v)?,
            "learn.rms_stop" => self.learn.rms_stop = parse_value(key, v)?,
            "learn.gradient" => {
                self.learn.gradient_mode = match v {
                    "adjoint" => GradientMode::Adjoint,
                    "finite-difference" => GradientMode::FiniteDifference,
                    other => {
                        return Err(Error::config(key, format!("expected adjoint or finite-difference, got '{other}'")))
                    }
                }
            }
            "learn.noise_gradient" => {
                self.learn.noisy_gradient = match v {
                    "clean" => NoisyGradient::Clean,
                    "realized" => NoisyGradient::Realized,
                    other => return Err(Error::config(key, format!("expected clean or realized, got '{other}'"))),
                }
            }
            "learn.init_seed" => self.learn.init_seed = parse_value(key, v)?,
            "learn.init_jitter" => self.learn.init_jitter = parse_value(key, v)?,
            "learn.init" => {
                self.init = match v {
                    "fresh" => InitPolicy::Fresh,
                    "bootstrap" => InitPolicy::Bootstrap,
                    "file" => InitPolicy::File,
                    other => {
                        return Err(Error::config(key, format!("expected fresh, bootstrap or file, got '{other}'")))
                    }
                }
            }
            "noise.magnitude" => self.noise.mag_amplitude = parse_value(key, v)?,
            "noise.phase" => self.noise.phase_amplitude = parse_value(key, v)?,
            "noise.hamiltonian" => self.noise.hamiltonian_amplitude = parse_value(key, v)?,
            "noise.seed" => self.noise.seed = parse_value(key, v)?,
            "io.output" => self.output = (!v.is_empty()).then(|| PathBuf::from(v)),
            "io.schedule" => self.schedule = (!v.is_empty()).then(|| PathBuf::from(v)),
            "observable.subset" => {
                self.observable = parse_subset(v).map_err(|e| Error::config(key, e.to_string()))?
            }
            "test.family" => {
                self.test.family = match v {
                    "P" | "p" => StateFamily::P,
                    "M" | "m" => StateFamily::M,
                    other => return Err(Error::config(key, format!("expected P or M, got '{other}'"))),
                }
            }
            "test.gammas" => self.test.gammas = parse_list(key, v)?,
            "test.noise_levels" => self.test.noise_levels = parse_list(key, v)?,
            "test.seeds" => self.test.seeds = parse_list(key, v)?,
            "test.channel" => self.test.channel = parse_channel(key, v)?,
            "sweep.noise_levels" => self.sweep.noise_levels = parse_list(key, v)?,
            "sweep.seeds" => self.sweep.seeds = parse_list(key, v)?,
            "sweep.qubits" => self.sweep.qubits = parse_list(key, v)?,
            "sweep.total_noise" => self.sweep.total_noise = parse_value(key, v)?,
            "sweep.channel" => self.sweep.channel = parse_channel(key, v)?,
            "sweep.long_run" => self.sweep.long_run = parse_value(key, v)?,
            other => {
                return Err(Error::Config { line: None, field: Some(other.to_string()), message: "unknown key".into() })
            }
        }
        Ok(())
    }

    /// Applies a `section.key=value` override from the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| Error::Config {
            line: None,
            field: None,
            message: format!("override '{assignment}' is not of the form section.key=value"),
        })?;
        self.apply(key.trim(), value)
    }

    /// Canonical `key = value` listing of every setting, in a fixed order.
    pub fn resolved(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        vec![
            ("system.n_qubits", self.n_qubits.to_string()),
            ("grid.t_final", self.grid.t_final.to_string()),
            ("grid.n_steps", self.grid.n_steps.to_string()),
            ("learn.rate", self.learn.learning_rate.to_string()),
            ("learn.max_epochs", self.learn.max_epochs.to_string()),
            ("learn.rms_stop", self.learn.rms_stop.to_string()),
            (
                "learn.gradient",
                match self.learn.gradient_mode {
                    GradientMode::Adjoint => "adjoint",
                    GradientMode::FiniteDifference => "finite-difference",
                }
                .into(),
            ),
            (
                "learn.noise_gradient",
                match self.learn.noisy_gradient {
                    NoisyGradient::Clean => "clean",
                    NoisyGradient::Realized => "realized",
                }
                .into(),
            ),
            ("learn.init_seed", self.learn.init_seed.to_string()),
            ("learn.init_jitter", self.learn.init_jitter.to_string()),
            (
                "learn.init",
                match self.init {
                    InitPolicy::Fresh => "fresh",
                    InitPolicy::Bootstrap => "bootstrap",
                    InitPolicy::File => "file",
                }
                .into(),
            ),
            ("noise.magnitude", self.noise.mag_amplitude.to_string()),
            ("noise.phase", self.noise.phase_amplitude.to_string()),
            ("noise.hamiltonian", self.noise.hamiltonian_amplitude.to_string()),
            ("noise.seed", self.noise.seed.to_string()),
            ("io.output", path(&self.output)),
            ("io.schedule", path(&self.schedule)),
            ("observable.subset", subset_label(&self.observable)),
            (
                "test.family",
                match self.test.family {
                    StateFamily::P => "P",
                    StateFamily::M => "M",
                }
                .into(),
            ),
            ("test.gammas", join(&self.test.gammas)),
            ("test.noise_levels", join(&self.test.noise_levels)),
            ("test.seeds", join(&self.test.seeds)),
            ("test.channel", channel_name(self.test.channel).into()),
            ("sweep.noise_levels", join(&self.sweep.noise_levels)),
            ("sweep.seeds", join(&self.sweep.seeds)),
            ("sweep.qubits", join(&self.sweep.qubits)),
            ("sweep.total_noise", self.sweep.total_noise.to_string()),
            ("sweep.channel", channel_name(self.sweep.channel).into()),
            ("sweep.long_run", self.sweep.long_run.to_string()),
        ]
    }

    /// Cross-field checks; run after all files and overrides are applied.
    pub fn validate(&self) -> Result<()> {
        if !(2..=5).contains(&self.n_qubits) {
            return Err(Error::config("system.n_qubits", format!("must be in 2..=5, got {}", self.n_qubits)));
        }
        if !(self.grid.t_final.is_finite() && self.grid.t_final > 0.0) {
            return Err(Error::config("grid.t_final", "must be > 0"));
        }
        if self.grid.n_steps < 2 {
            return Err(Error::config("grid.n_steps", "must be >= 2"));
        }
        self.learn.validate()?;
        self.noise.validate()?;
        if self.test.gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::config("test.gammas", "values must lie in [0, 1]"));
        }
        for (field, levels) in [("test.noise_levels", &self.test.noise_levels), ("sweep.noise_levels", &self.sweep.noise_levels)] {
            if levels.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return Err(Error::config(field, "amplitudes must be finite and >= 0"));
            }
        }
        if !(self.sweep.total_noise.is_finite() && self.sweep.total_noise >= 0.0) {
            return Err(Error::config("sweep.total_noise", "must be finite and >= 0"));
        }
        if self.sweep.qubits.windows(2).any(|w| w[1] <= w[0]) || self.sweep.qubits.iter().any(|n| !(2..=5).contains(n)) {
            return Err(Error::config("sweep.qubits", "sizes must be ascending within 2..=5"));
        }
        if !self.sweep.long_run && self.sweep.qubits.iter().any(|&n| n > 3) {
            return Err(Error::config("sweep.qubits", "sizes above 3 need sweep.long_run = true"));
        }
        if let (Some(out), Some(sched)) = (&self.output, &self.schedule) {
            if out == sched {
                return Err(Error::config("io.schedule", "must differ from io.output"));
            }
        }
        if self.init == InitPolicy::File && self.schedule.is_none() {
            return Err(Error::config("io.schedule", "learn.init = file needs a schedule path"));
        }
        Ok(())
    }
}

/// Parses config text on top of the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    apply_text(&mut cfg, text)?;
    Ok(cfg)
}

/// Applies config text on top of an existing configuration.
pub fn apply_text(cfg: &mut ExperimentConfig, text: &str) -> Result<()> {
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: Some(line_no),
            field: None,
            message: format!("expected 'section.key = value', got '{line}'"),
        })?;
        let key = key.trim();
        if !key.contains('.') {
            return Err(Error::Config {
                line: Some(line_no),
                field: Some(key.to_string()),
                message: "keys take the form section.key".into(),
            });
        }
        cfg.apply(key, value).map_err(|e| match e {
            Error::Config { field, message, .. } => Error::Config { line: Some(line_no), field, message },
            other => other,
        })?;
    }
    Ok(())
}

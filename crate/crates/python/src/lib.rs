//! Python bindings: the witness oracle, training, Fourier fits and the
//! experiment runner.

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qnn_core::analysis;
use qnn_core::harness::{self, apply_text, initial_schedule, ExperimentConfig, TaskKind};
use qnn_core::learning;
use qnn_core::linalg::PureState;
use qnn_core::witness;
use qnn_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn configure(config: &str, overrides: Option<Vec<String>>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    apply_text(&mut cfg, config)?;
    for o in overrides.unwrap_or_default() {
        cfg.apply_override(&o)?;
    }
    Ok(cfg)
}

fn json_to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

/// Squared concurrence of a normalized two-qubit ket given as 4 amplitudes.
#[pyfunction]
fn concurrence_squared(amplitudes: Vec<Complex64>) -> PyResult<f64> {
    let state = PureState::new(amplitudes).map_err(to_py)?;
    witness::concurrence_squared(&state).map_err(to_py)
}

/// `(label, target)` of every training pair for an `n_qubits` register.
#[pyfunction]
fn training_targets(n_qubits: usize) -> PyResult<Vec<(String, f64)>> {
    let pairs = witness::training_set(n_qubits).map_err(to_py)?;
    Ok(pairs.into_iter().map(|p| (p.label, p.target)).collect())
}

/// Trains under a config text plus `section.key=value` overrides and returns
/// the training report as a dict (schedule included).
#[pyfunction]
#[pyo3(signature = (config = "", overrides = None))]
fn train<'py>(py: Python<'py>, config: &str, overrides: Option<Vec<String>>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = configure(config, overrides).map_err(to_py)?;
    let report = py
        .detach(|| -> Result<_, Error> {
            cfg.validate()?;
            let init = initial_schedule(&cfg)?;
            let noise = (!cfg.noise.is_silent()).then_some(&cfg.noise);
            learning::train(&init, &witness::training_set(cfg.n_qubits)?, cfg.n_qubits, &cfg.learn, noise)
        })
        .map_err(to_py)?;
    let out = json_to_py(py, &report.to_json())?;
    let schedule = PyDict::new(py);
    for p in qnn_core::dynamics::Param::ALL {
        schedule.set_item(p.name(), report.schedule.series(p).to_vec())?;
    }
    schedule.set_item("t", report.schedule.grid().times())?;
    out.set_item("schedule", schedule)?;
    Ok(out)
}

/// Least-squares Fourier fit of `series` sampled at `times`.
#[pyfunction]
#[pyo3(signature = (series, times, order = 1))]
fn fourier_fit<'py>(py: Python<'py>, series: Vec<f64>, times: Vec<f64>, order: usize) -> PyResult<Bound<'py, PyDict>> {
    let fit = analysis::fourier_fit(&series, &times, order).map_err(to_py)?;
    let out = PyDict::new(py);
    for (name, value) in fit.coefficients() {
        out.set_item(name, value)?;
    }
    out.set_item("fit_rms", fit.fit_rms)?;
    out.set_item("r2", fit.r_squared)?;
    Ok(out)
}

/// Runs one CLI task (`train`, `test`, `sweep-noise`, `sweep-qubits`, `fit`)
/// and returns its summary line.
#[pyfunction]
#[pyo3(signature = (task, config = "", overrides = None))]
fn run(py: Python<'_>, task: &str, config: &str, overrides: Option<Vec<String>>) -> PyResult<String> {
    let task: TaskKind = task.parse().map_err(to_py)?;
    let cfg = configure(config, overrides).map_err(to_py)?;
    let summary = py.detach(|| harness::run(task, &cfg)).map_err(to_py)?;
    Ok(summary.line)
}

#[pymodule]
pub fn qnn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(concurrence_squared, m)?)?;
    m.add_function(wrap_pyfunction!(training_targets, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(fourier_fit, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}

//! Reference computations kept independent of the library code paths.
#![allow(dead_code)]

use num_complex::Complex64;
use qnn_core::dynamics::{Param, ParameterSchedule, StepGradients, TimeGrid};
use qnn_core::learning::loss_and_outputs;
use qnn_core::linalg::{CMatrix, DensityMatrix};
use qnn_core::witness::TrainingPair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `C = 2|ad − bc|` for a normalized two-qubit ket `(a, b, c, d)`.
pub fn concurrence_squared_amplitudes(amps: &[Complex64; 4]) -> f64 {
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let c = 2.0 * (amps[0] * amps[3] - amps[1] * amps[2]).norm() / norm;
    c * c
}

/// Half sum of squared errors from the public outputs.
pub fn half_sse(schedule: &ParameterSchedule, pairs: &[TrainingPair], n: usize) -> f64 {
    let (_, outputs) = loss_and_outputs(schedule, pairs, n, None, 0).unwrap();
    outputs.iter().zip(pairs).map(|(y, p)| 0.5 * (y - p.target).powi(2)).sum()
}

/// Central differences of [`half_sse`] with step `h`.
pub fn finite_difference(schedule: &ParameterSchedule, pairs: &[TrainingPair], n: usize, h: f64) -> Vec<(Param, usize, f64)> {
    let mut out = Vec::new();
    for p in Param::ALL {
        for k in 0..schedule.n_steps() {
            let shifted = |delta: f64| {
                let mut series: Vec<Vec<f64>> = Param::ALL.iter().map(|&q| schedule.series(q).to_vec()).collect();
                series[p as usize][k] += delta;
                let [kk, e, z]: [Vec<f64>; 3] = series.try_into().unwrap();
                ParameterSchedule::new(*schedule.grid(), kk, e, z).unwrap()
            };
            let d = (half_sse(&shifted(h), pairs, n) - half_sse(&shifted(-h), pairs, n)) / (2.0 * h);
            out.push((p, k, d));
        }
    }
    out
}

/// Largest per-component relative error of `adjoint` against `reference`;
/// components below `floor · max|reference|` are compared against that floor.
pub fn max_relative_error(adjoint: &StepGradients, reference: &[(Param, usize, f64)], floor: f64) -> f64 {
    let scale = reference.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    reference
        .iter()
        .map(|&(p, k, f)| (adjoint.series(p)[k] - f).abs() / f.abs().max(floor * scale).max(1e-300))
        .fold(0.0, f64::max)
}

pub fn random_schedule(rng: &mut ChaCha8Rng, n_steps: usize, scale: f64) -> ParameterSchedule {
    let grid = TimeGrid::new(n_steps as f64, n_steps).unwrap();
    let mut s = || (0..n_steps).map(|_| rng.random_range(-scale..scale)).collect::<Vec<_>>();
    let (k, e, z) = (s(), s(), s());
    ParameterSchedule::new(grid, k, e, z).unwrap()
}

pub fn random_ket(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Relabels qubits: qubit `q` of the input becomes qubit `perm[q]`.
pub fn permute_qubits(m: &CMatrix, perm: &[usize]) -> CMatrix {
    let n = perm.len();
    let map = |idx: usize| -> usize {
        (0..n).fold(0, |acc, q| {
            let bit = (idx >> (n - 1 - q)) & 1;
            acc | (bit << (n - 1 - perm[q]))
        })
    };
    let dim = 1 << n;
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            out[(map(i), map(j))] = m[(i, j)];
        }
    }
    out
}

pub fn permute_pair(pair: &TrainingPair, perm: &[usize]) -> TrainingPair {
    let rho = DensityMatrix::new(permute_qubits(pair.input.elements(), perm)).unwrap();
    let mut subset: Vec<usize> = pair.subset.iter().map(|&q| perm[q]).collect();
    subset.sort_unstable();
    TrainingPair::new(rho, pair.target, subset, pair.label.clone()).unwrap()
}

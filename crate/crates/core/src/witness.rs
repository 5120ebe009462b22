//! Entanglement ground truth, the trained output observable, and the
//! training and test states.
//!
//! Targets are squared concurrence C², so the pairwise training set is
//! Bell → 1, Flat → 0, C → 0 and P → 4/9.

use itertools::Itertools;
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::check_system_size;
use crate::error::{Error, Result};
use crate::linalg::{self, Axis, CMatrix, DensityMatrix, HermitianOperator, PureState};

pub fn qubit_label(q: usize) -> char {
    (b'A' + q as u8) as char
}

pub fn subset_label(subset: &[usize]) -> String {
    subset.iter().map(|&q| qubit_label(q)).collect()
}

/// Parses `"BC"`, `"B,C"` or `"1,2"` into qubit indices.
pub fn parse_subset(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let parts: Vec<&str> = if text.contains(',') {
        text.split(',').map(str::trim).collect()
    } else if text.chars().all(|c| c.is_ascii_alphabetic()) {
        text.split("").filter(|s| !s.is_empty()).collect()
    } else {
        vec![text]
    };
    parts
        .into_iter()
        .map(|p| {
            if let Ok(i) = p.parse::<usize>() {
                return Ok(i);
            }
            let mut chars = p.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_alphabetic() => Ok((c.to_ascii_uppercase() as u8 - b'A') as usize),
                _ => Err(Error::arg(format!("cannot parse qubit '{p}'"))),
            }
        })
        .collect()
}

fn check_subset(subset: &[usize], n_qubits: usize, min_len: usize) -> Result<()> {
    if subset.len() < min_len || subset.len() > n_qubits {
        return Err(Error::arg(format!(
            "subset {subset:?} must have between {min_len} and {n_qubits} qubits"
        )));
    }
    if subset.iter().any(|&q| q >= n_qubits) {
        return Err(Error::arg(format!("subset {subset:?} out of range for {n_qubits} qubits")));
    }
    if subset.iter().duplicates().next().is_some() {
        return Err(Error::arg(format!("subset {subset:?} has repeated qubits")));
    }
    Ok(())
}

/// ⊗σz over a subset of qubits, identity elsewhere.
#[derive(Debug, Clone)]
pub struct WitnessObservable {
    subset: Vec<usize>,
    operator: HermitianOperator,
}

impl WitnessObservable {
    pub fn new(subset: &[usize], n_qubits: usize) -> Result<Self> {
        check_subset(subset, n_qubits, 1)?;
        let dim = 1usize << n_qubits;
        // ⊗σz is diagonal: the sign is the parity of the subset bits.
        let mask: usize = subset.iter().map(|&q| 1usize << (n_qubits - 1 - q)).sum();
        let diag = (0..dim).map(|i| {
            let sign = if (i & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign, 0.0)
        });
        let op = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, diag));
        Ok(Self { subset: subset.to_vec(), operator: HermitianOperator::from_trusted(op) })
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.operator
    }
}

/// Squared expectation of the observable at the final time, in [0, 1].
pub fn output_value(rho_final: &DensityMatrix, obs: &WitnessObservable) -> Result<f64> {
    let e = linalg::expectation(rho_final, obs.operator())?;
    Ok(e * e)
}

/// C² = |⟨ψ|ψ̃⟩|² with the spin-flipped ket ψ̃ = (σy⊗σy)|ψ*⟩.
pub fn concurrence_squared(state: &PureState) -> Result<f64> {
    if state.dim() != 4 {
        return Err(Error::arg(format!(
            "concurrence needs a two-qubit ket, got dimension {}",
            state.dim()
        )));
    }
    let yy = linalg::pauli_on(Axis::Y, 0, 2)?.elements() * linalg::pauli_on(Axis::Y, 1, 2)?.elements();
    let psi = state.amplitudes();
    let flipped = yy * psi.conjugate();
    Ok(psi.dotc(&flipped).norm_sqr().min(1.0))
}

/// Entanglement of formation from C² via the binary entropy of (1 + √(1−C²))/2.
pub fn entanglement_of_formation(c_squared: f64) -> Result<f64> {
    const TOL: f64 = 1e-12;
    if !(-TOL..=1.0 + TOL).contains(&c_squared) || c_squared.is_nan() {
        return Err(Error::arg(format!("C² = {c_squared} outside [0, 1]")));
    }
    let c2 = c_squared.clamp(0.0, 1.0);
    let root = (1.0 - c2).sqrt();
    let plus = 0.5 * (1.0 + root);
    let minus = 0.5 * (1.0 - root);
    let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(h(plus) + h(minus))
}

#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub input: DensityMatrix,
    pub target: f64,
    pub subset: Vec<usize>,
    pub label: String,
}

impl TrainingPair {
    pub fn new(input: DensityMatrix, target: f64, subset: Vec<usize>, label: impl Into<String>) -> Result<Self> {
        check_subset(&subset, input.n_qubits(), 2)?;
        if !(0.0..=1.0).contains(&target) {
            return Err(Error::arg(format!("target {target} outside [0, 1]")));
        }
        Ok(Self { input, target, subset, label: label.into() })
    }

    pub fn n_qubits(&self) -> usize {
        self.input.n_qubits()
    }

    pub fn observable(&self) -> Result<WitnessObservable> {
        WitnessObservable::new(&self.subset, self.n_qubits())
    }
}

/// The four pairwise training kets (unnormalized real amplitudes over
/// |00⟩, |01⟩, |10⟩, |11⟩) with their C² targets.
pub fn pairwise_kets() -> [(&'static str, [f64; 4], f64); 4] {
    [
        ("Bell", [1.0, 0.0, 0.0, 1.0], 1.0),
        ("Flat", [1.0, 1.0, 1.0, 1.0], 0.0),
        ("C", [0.0, 0.0, 0.5, 1.0], 0.0),
        ("P", [1.0, 0.0, 1.0, 1.0], 4.0 / 9.0),
    ]
}

/// Places two-qubit amplitudes on qubits `(a, b)` with |0⟩ on the rest.
pub fn embed_pair(amps: &[Complex64; 4], a: usize, b: usize, n_qubits: usize) -> Result<PureState> {
    check_subset(&[a, b], n_qubits, 2)?;
    let mut full = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    for (idx, amp) in amps.iter().enumerate() {
        let bit_a = (idx >> 1) & 1;
        let bit_b = idx & 1;
        full[(bit_a << (n_qubits - 1 - a)) | (bit_b << (n_qubits - 1 - b))] = *amp;
    }
    PureState::new(full)
}

/// (|0…0⟩ + |1…1⟩)/√2 on `subset`, |0⟩ elsewhere.
pub fn ghz_state(n_qubits: usize, subset: &[usize]) -> Result<PureState> {
    check_subset(subset, n_qubits, 3)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    let ones: usize = subset.iter().map(|&q| 1usize << (n_qubits - 1 - q)).sum();
    amps[0] = Complex64::new(1.0, 0.0);
    amps[ones] = Complex64::new(1.0, 0.0);
    PureState::new(amps)
}

/// Four pairwise states for every qubit pair, then one GHZ state for every
/// subset of size 3..=n, all with the ⊗σz observable on the subset.
pub fn training_set(n_qubits: usize) -> Result<Vec<TrainingPair>> {
    check_system_size(n_qubits)?;
    let mut pairs = Vec::new();
    for pair in (0..n_qubits).combinations(2) {
        for (name, amps, target) in pairwise_kets() {
            let amps = amps.map(|a| Complex64::new(a, 0.0));
            let ket = embed_pair(&amps, pair[0], pair[1], n_qubits)?;
            let label = format!("{name}[{}]", subset_label(&pair));
            pairs.push(TrainingPair::new(linalg::outer_product(&ket), target, pair.clone(), label)?);
        }
    }
    for k in 3..=n_qubits {
        for subset in (0..n_qubits).combinations(k) {
            let ket = ghz_state(n_qubits, &subset)?;
            let label = format!("GHZ[{}]", subset_label(&subset));
            pairs.push(TrainingPair::new(linalg::outer_product(&ket), 1.0, subset, label)?);
        }
    }
    Ok(pairs)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::arg(format!("gamma {gamma} outside [0, 1]")));
    }
    Ok(())
}

/// Pure three-qubit test state (|000⟩ + γ|001⟩ + |011⟩)/√(2+γ²), entangled
/// on the BC pair.
pub fn test_state_p(gamma: f64) -> Result<DensityMatrix> {
    check_gamma(gamma)?;
    let mut amps = [0.0; 8];
    amps[0] = 1.0;
    amps[1] = gamma;
    amps[3] = 1.0;
    Ok(linalg::outer_product(&PureState::from_real(&amps)?))
}

/// C² of the BC pair of [`test_state_p`].
pub fn test_state_p_oracle(gamma: f64) -> f64 {
    let n = 2.0 + gamma * gamma;
    4.0 / (n * n)
}

/// Mixed three-qubit test state: the BC Bell pair (weight 1) plus γ|001⟩⟨001|,
/// divided by 1 + γ.
pub fn test_state_m(gamma: f64) -> Result<DensityMatrix> {
    check_gamma(gamma)?;
    let mut m = CMatrix::zeros(8, 8);
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        m[(i, j)] = Complex64::new(0.5, 0.0);
    }
    m[(1, 1)] = Complex64::new(gamma, 0.0);
    DensityMatrix::new(m / Complex64::new(1.0 + gamma, 0.0))
}

#[derive(Serialize)]
struct PairJson<'a> {
    label: &'a str,
    target: f64,
    subset: &'a [usize],
    /// Row-major `[re, im]` entries.
    input: Vec<Vec<[f64; 2]>>,
}

pub fn matrix_to_json(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// JSON array of training pairs with complex entries as `[re, im]`.
pub fn training_set_json(pairs: &[TrainingPair]) -> serde_json::Value {
    let items: Vec<PairJson> = pairs
        .iter()
        .map(|p| PairJson {
            label: &p.label,
            target: p.target,
            subset: &p.subset,
            input: matrix_to_json(p.input.elements()),
        })
        .collect();
    serde_json::to_value(items).expect("plain data serializes")
}

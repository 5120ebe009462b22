//! Dense complex linear algebra for few-qubit states and operators.
//!
//! Basis convention: the bits of a basis index, read most significant first,
//! are qubits A, B, C, ... and bit value 0 is |0⟩. For three qubits index 3
//! (`011`) is |0⟩_A |1⟩_B |1⟩_C.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 5;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn matrix(self) -> CMatrix {
        match self {
            Axis::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Axis::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            Axis::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }
}

/// Number of qubits for a Hilbert-space dimension, if it is a power of two.
pub fn qubits_for_dim(dim: usize) -> Option<usize> {
    (dim >= 2 && dim.is_power_of_two()).then(|| dim.trailing_zeros() as usize)
}

/// Largest |m_ij - conj(m_ji)|.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Tr(a b) without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Normalized ket on `log2(len)` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Normalizes `amplitudes`; the length must be a power of two (at least 2).
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if qubits_for_dim(len).is_none() {
            return Err(Error::arg(format!(
                "ket length {len} is not a power of two >= 2"
            )));
        }
        let v = CVector::from_vec(amplitudes);
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Degenerate("ket has zero or non-finite norm".into()));
        }
        Ok(Self { amplitudes: v / Complex64::new(norm, 0.0) })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: CMatrix,
}

impl DensityMatrix {
    /// Validates all invariants; use [`project_physical`] to repair a
    /// nearly-physical matrix instead.
    pub fn new(elements: CMatrix) -> Result<Self> {
        check_square_qubit_dim(&elements)?;
        let herm = hermiticity_error(&elements);
        if herm > HERMITIAN_TOL {
            return Err(Error::ContractViolation(format!(
                "density matrix not Hermitian (error {herm:.3e})"
            )));
        }
        let tr = trace(&elements);
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::ContractViolation(format!(
                "density matrix trace {tr} is not 1"
            )));
        }
        let min_eig = min_eigenvalue(&elements);
        if min_eig < -PSD_TOL {
            return Err(Error::ContractViolation(format!(
                "density matrix has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { elements })
    }

    /// Wraps a matrix known to be physical up to round-off (e.g. the image of
    /// a valid state under a unitary).
    pub(crate) fn from_trusted(elements: CMatrix) -> Self {
        Self { elements }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        Ok(Self {
            elements: CMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0),
        })
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn into_elements(self) -> CMatrix {
        self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn trace(&self) -> Complex64 {
        trace(&self.elements)
    }

    /// Tr(ρ²).
    pub fn purity(&self) -> f64 {
        self.elements.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Matrix that has been checked (or constructed) to be Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    elements: CMatrix,
}

impl HermitianOperator {
    pub fn new(elements: CMatrix) -> Result<Self> {
        if !elements.is_square() {
            return Err(Error::arg("operator must be square"));
        }
        let herm = hermiticity_error(&elements);
        if herm > HERMITIAN_TOL {
            return Err(Error::ContractViolation(format!(
                "operator not Hermitian (error {herm:.3e})"
            )));
        }
        Ok(Self { elements })
    }

    pub(crate) fn from_trusted(elements: CMatrix) -> Self {
        Self { elements }
    }

    pub fn identity(dim: usize) -> Self {
        Self { elements: CMatrix::identity(dim, dim) }
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }
}

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::arg(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn check_square_qubit_dim(m: &CMatrix) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::arg(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    qubits_for_dim(m.nrows())
        .ok_or_else(|| Error::arg(format!("dimension {} is not a power of two", m.nrows())))
}

/// σ_axis acting on `qubit` (0 = A) of an `n_qubits` register.
pub fn pauli_on(axis: Axis, qubit: usize, n_qubits: usize) -> Result<HermitianOperator> {
    check_qubit_count(n_qubits)?;
    if qubit >= n_qubits {
        return Err(Error::arg(format!(
            "qubit index {qubit} out of range for {n_qubits} qubits"
        )));
    }
    let left = CMatrix::identity(1 << qubit, 1 << qubit);
    let right_dim = 1 << (n_qubits - qubit - 1);
    let right = CMatrix::identity(right_dim, right_dim);
    let op = left.kronecker(&axis.matrix()).kronecker(&right);
    Ok(HermitianOperator::from_trusted(op))
}

/// |ψ⟩⟨ψ|.
pub fn outer_product(ket: &PureState) -> DensityMatrix {
    let v = ket.amplitudes();
    DensityMatrix::from_trusted(v * v.adjoint())
}

/// Spectral decomposition `op = V diag(values) V†`, values ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn hermitian_eigen(op: &HermitianOperator) -> Eigen {
    eigen_unchecked(op.elements().clone())
}

/// Eigendecomposition of an arbitrary square matrix that must be Hermitian.
pub fn hermitian_eigen_matrix(m: &CMatrix) -> Result<Eigen> {
    let op = HermitianOperator::new(m.clone())?;
    Ok(hermitian_eigen(&op))
}

fn eigen_unchecked(m: CMatrix) -> Eigen {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Eigen { values, vectors }
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = hermitize(m);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// (m + m†)/2.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Tr(ρ O). Fails if the dimensions differ.
pub fn expectation(rho: &DensityMatrix, op: &HermitianOperator) -> Result<f64> {
    if rho.dim() != op.dim() {
        return Err(Error::arg(format!(
            "dimension mismatch: state {} vs operator {}",
            rho.dim(),
            op.dim()
        )));
    }
    let value = trace_of_product(rho.elements(), op.elements());
    if value.im.abs() > 1e-10 {
        return Err(Error::ContractViolation(format!(
            "expectation has imaginary residue {:.3e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// Nearest valid density matrix by Hermitian part, eigenvalue clipping and
/// trace renormalization.
pub fn project_physical(m: &CMatrix) -> Result<DensityMatrix> {
    check_square_qubit_dim(m)?;
    let h = hermitize(m);
    let eig = eigen_unchecked(h.clone());
    if eig.values[0] >= 0.0 {
        let tr = trace(&h).re;
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::Degenerate("matrix has zero trace".into()));
        }
        if (tr - 1.0).abs() <= f64::EPSILON {
            return Ok(DensityMatrix::from_trusted(h));
        }
        return Ok(DensityMatrix::from_trusted(h / Complex64::new(tr, 0.0)));
    }
    let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Degenerate(
            "no positive spectral weight left after clipping".into(),
        ));
    }
    let repaired = Eigen {
        values: clipped.iter().map(|v| v / total).collect(),
        vectors: eig.vectors,
    }
    .reconstruct();
    // The reconstruction is Hermitian only to round-off; fold it back.
    Ok(DensityMatrix::from_trusted(hermitize(&repaired)))
}

//! Quantum neural network trained to report pairwise entanglement.
//!
//! A register of 2 to 5 qubits evolves under a time-dependent Hamiltonian
//! with tunnelling (`K`), bias (`ε`) and `zz` coupling (`ζ`) terms shared by
//! all qubits. Those three schedules are learned by gradient descent so that
//! the squared expectation of a parity observable at the final time matches
//! an entanglement target for a set of training states.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod learning;
pub mod linalg;
pub mod noise;
pub mod witness;

pub use error::{Error, Result};

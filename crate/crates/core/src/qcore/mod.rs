//! Dense complex linear algebra and quantum-state primitives for one to three
//! qubits.
//!
//! Qubit 0 is mode 1 (842 nm), qubit 1 is mode 2 (1530 nm) and qubit 2 is
//! mode 3 (1570 nm). Qubit 0 is the most significant bit of a basis index and
//! `|H…H⟩` is index 0.

pub mod io;
mod matrix;
mod random;
mod state;

pub use matrix::{tensor, tensor_all, ComplexMatrix, C64, I, ONE, ZERO};
pub use random::{random_density_matrix, random_ket};
pub use state::{
    expectation, fidelity, fidelity_pure, partial_trace, pauli, purity, trace_distance, validate_physical, Axis,
    DensityMatrix, Ket, Observable, PHYSICAL_TOL,
};

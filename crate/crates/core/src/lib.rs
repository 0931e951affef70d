//! Dynamical models for arbitrary POVMs.
//!
//! A POVM on a system `S` is realized by a unitary coupling to an ancilla `A`
//! (a Naimark dilation). This crate builds the dilation explicitly from the
//! detection operators, generates it from a time-independent Hamiltonian
//! (a periodic two-level variant and a hopping-chain variant whose population
//! leaves the initial level for an extended window), and audits the result:
//! recovered statistics, pointer-state orthonormality, complete positivity of
//! the induced local map, and a system+ancilla+apparatus variant.
//!
//! Modules, bottom-up:
//! - [`qmatrix`]: dense complex kernel (tensor, partial trace, eigen, `e^{-iHt}`, PSD roots)
//! - [`states`]: density matrices, POVMs, detection operators, post-measurement states
//! - [`naimark`]: ancilla layout, ξ-vectors and the dilation unitary
//! - [`dynamics`]: chain Hamiltonians, amplitudes `β_ℓ(t)`, pointer states, plateau detection
//! - [`cpt`]: Gram-matrix audit of the forced von Neumann map
//! - [`triad`]: finite-dimensional apparatus model and the double-labeled POVM
//! - [`povm_file`]: the JSON interchange format for POVMs
//! - [`fixtures`]: reference POVMs and seeded random generators

pub mod cpt;
pub mod dynamics;
pub mod error;
pub mod fixtures;
pub mod naimark;
pub mod povm_file;
pub mod qmatrix;
pub mod states;
pub mod triad;

pub use error::{Error, Result};
pub use qmatrix::{ComplexMatrix, CVector, C64};

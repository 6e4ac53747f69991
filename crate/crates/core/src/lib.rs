//! Simulation and analysis of bang-bang dynamical decoupling on a
//! nearest-neighbour Heisenberg spin-1/2 chain.
//!
//! The crate is `no_std` (with `alloc`). Enable the `std` feature for
//! runtime CPU feature detection in the dense kernels.
//!
//! Module map:
//!
//! - [`pauli`]: N-qubit Pauli strings with exact `Z4` phases, plus Pauli-basis
//!   decomposition of Hermitian operators.
//! - [`hamiltonian`]: the chain Hamiltonian in the lab or rotating frame, with
//!   cached block-wise spectral data.
//! - [`groups`]: the nested `4^m` group and the 4-element collective group.
//! - [`schedule`]: deterministic, randomized and hybrid pulse schedules.
//! - [`propagation`]: logical-frame propagator accumulation.
//! - [`aht`]: average Hamiltonian diagnostics and decay-bound estimates.
//! - [`fidelity`]: fidelities, ensembles and decay-exponent fits.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod aht;
pub mod error;
pub mod fidelity;
pub mod groups;
pub mod hamiltonian;
pub mod linalg;
pub mod pauli;
pub mod propagation;
pub mod schedule;

pub use error::{Error, ErrorKind, Result};
pub use linalg::CMat;
pub use num_complex::Complex64;

/// Largest chain for which dense `2^N x 2^N` matrices are built unless a
/// caller raises the cap explicitly.
pub const DEFAULT_MAX_QUBITS: usize = 10;

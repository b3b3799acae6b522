//! Pre-Born-Oppenheimer vibronic dynamics of a two-electron Shin-Metiu model
//! mapped onto a coupled multi-qubit-boson (cMQB) simulator.
//!
//! Pipeline: grid electronic structure and diabatic integrals ([`electronic`]),
//! Jordan-Wigner mapping ([`fermion`], [`pauli`]), exact and Trotterized
//! propagation ([`engine`], [`trotter`]), measurement emulation
//! ([`tomography`], [`density`]), and a Born-Oppenheimer reference ([`bo`]).

extern crate openblas_src;

pub mod bo;
pub mod config;
pub mod density;
pub mod electronic;
pub mod engine;
pub mod error;
pub mod fermion;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod pauli;
pub mod scenario;
pub mod tomography;
pub mod trotter;

pub use error::{Error, Result};
pub use num_complex::Complex64;

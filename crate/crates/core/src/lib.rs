//! Spin-adapted fermionic excitation operators and their unitaries.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`] enumerates occupation-number bases and symmetry sectors.
//! * [`fermiops`] holds second-quantized operators and turns them into sparse
//!   sector matrices.
//! * [`spinadapt`] builds singlet (and triplet) spin-adapted generators and
//!   GSD / saGSD operator pools.
//! * [`expm`] computes exact unitaries by blockwise eigendecomposition and
//!   evaluates the trigonometric closed forms.
//! * [`trotter`] implements the first-, second- and fourth-order product
//!   formulas and the associated error and spin-violation scans.
//! * [`pauli`] is the Jordan–Wigner encoding and LCU extraction.
//! * [`fcidump`] and [`adaptvqe`] ingest molecular integrals and run a
//!   statevector ADAPT-VQE.

pub mod adaptvqe;
pub mod csv;
pub mod error;
pub mod expm;
pub mod fcidump;
pub mod fermiops;
pub mod fock;
pub mod optimize;
pub mod pauli;
pub mod sparse;
pub mod spinadapt;
pub mod trig;
pub mod trotter;

pub use error::{Error, Result};
pub use num_complex::Complex64;

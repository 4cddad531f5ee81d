//! Operational measures of quantum correlations for indistinguishable
//! fermions and bosons in finite Hilbert spaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectra`]: self-contained dense Hermitian linear algebra (Jacobi
//!   eigensolver, singular values, partial transpose/trace, entropy).
//! - [`fock`]: fixed-N occupation bases, ladder operators, first-quantized
//!   embedding and single-particle reduced states.
//! - [`measures`]: shifted entropy, shifted negativity, the bosonic entropy
//!   classifier and the closed-form trace norm of uncorrelated states.
//! - [`slater`]: Slater/Takagi decompositions, Slater concurrence, dual
//!   states and the optimal mixing decomposition for two fermions.
//! - [`witness`]: cutting-plane optimal witnesses and robustness estimates.
//! - [`manybody`]: circulant reduced states of homogeneous lattice models
//!   with a small exact-diagonalization engine.
//! - [`io`]: text formats for states and correlator tables.
//! - [`verify`]: the oracle suite behind the `verify` command.

pub mod error;
pub mod fock;
pub mod io;
pub mod manybody;
pub mod measures;
pub mod slater;
pub mod spectra;
pub mod verify;
pub mod witness;

pub use error::{Error, Result};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

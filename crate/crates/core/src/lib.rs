//! Numerical resonance theory for embedded eigenvalues.
//!
//! A Hamiltonian `H_κ = H + κV` with an eigenvalue `λ` embedded in continuous
//! spectrum is reduced, via the Feshbach projection onto the eigenvector `φ`,
//! to the scalar function `B(z, κ)`. From its boundary values the crate
//! computes the Golden Rule width, the complex resonance `λ_κ`, and the
//! quasi-exponential decay of the survival amplitude `(φ, e^{−itH_κ} g(H_κ) φ)`,
//! and certifies the positive-commutator estimate behind the analysis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decay;
pub mod error;
pub mod feshbach;
pub mod fit;
pub mod linalg;
pub mod models;
pub mod mourre;
pub mod quad;
pub mod resonance;

pub use error::{Error, ErrorClass, Result};
pub use num_complex::Complex64 as c64;

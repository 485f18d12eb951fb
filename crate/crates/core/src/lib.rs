//! Finite-element laboratory for δ-Stekloff eigenvalues of an inhomogeneous
//! medium inside a disk.
//!
//! The crate is `no_std` (it needs `alloc`). It covers the whole numerical
//! pipeline:
//!
//! - [`mesh`]: interface-conforming triangulations of the disk with a tagged
//!   scatterer and an optional circular void, plus uniform red refinement;
//! - [`coefficients`]: piecewise-smooth media `(A, n)` and `L^p` difference norms;
//! - [`smoothing`]: the Bessel potential `S_δ = (I + Δ_∂B)^{-δ}` on the circle via
//!   its exact Fourier spectrum;
//! - [`assembly`]: P1 matrices of the pencil `K u = -λ B_δ u`;
//! - [`eigen`]: shift-invert Krylov–Schur, normalization and simplicity checks,
//!   and a dense reference solver for small instances;
//! - [`perturbation`]: the first-order eigenvalue correction, pairing of
//!   eigenpairs, remainder slopes and `L^1` bound checks.
//!
//! Sparse and dense complex linear algebra lives in [`sparse`], [`ldu`] and
//! [`dense`]; Bessel functions used by the disk oracle live in [`bessel`].

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod assembly;
pub mod bessel;
pub mod coefficients;
pub mod dense;
pub mod eigen;
mod error;
pub mod ldu;
pub mod mesh;
pub mod perturbation;
pub mod smoothing;
pub mod sparse;
pub mod stats;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

pub(crate) fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

//! Reconstruction of two-dimensional Helmholtz radiation solutions from the
//! imaginary part of their values on a line.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: integer-order Bessel and Hankel functions of real argument.
//! * [`fields`]: exact synthetic radiation fields and `Im(psi)` sampling on rays.
//! * [`farfield`]: two-point recovery of the far-field expansion coefficients.
//! * [`karp`]: conversion to the convergent Karp expansion and its evaluation.
//! * [`propagate`]: Green-formula continuation from a line into a half-plane.
//! * [`scatter`]: Lippmann–Schwinger forward solver and the resolvent reduction demo.
//! * [`scenario`]: JSON scenarios, the batch runner behind the `imrecon` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod farfield;
pub mod fields;
pub mod geometry;
pub mod karp;
pub mod linalg;
pub mod propagate;
pub mod quadrature;
pub mod scatter;
pub mod scenario;
pub mod specfun;

pub use error::{Error, Result};
pub use geometry::{LineSpec, Vec2};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

//! Finite-stage generalized Riesz products on the circle.
//!
//! Sparse analytic polynomials, their inner/outer factorization and
//! Mahler measure, product diagnostics, affinity and singularity
//! certificates, rank-one spectral polynomials, and flatness experiments.

pub mod dichotomy;
pub mod dissociation;
pub mod error;
pub mod fft;
pub mod flatness;
pub mod polynomial;
pub mod products;
pub mod rankone;
pub mod factorization;
pub mod roots;
pub mod specfile;

pub use error::{Error, Result};
pub use polynomial::{GridValues, TrigPolynomial};

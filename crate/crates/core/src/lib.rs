//! A numerical laboratory for the fractional Laplacian `(-Δ)^a`, `0 < a < 1`,
//! and related even, strongly elliptic operators of order `2a` in one space
//! dimension.
//!
//! The crate applies these operators both as Fourier multipliers and as
//! principal-value singular integrals, solves the model Dirichlet problem on
//! the half-line by plus/minus factorization, solves the restricted Dirichlet
//! problem on `(-1, 1)` in a weighted Jacobi basis, evolves the fractional
//! heat equation, and simulates the killed symmetric stable process as a
//! probabilistic cross-check.
//!
//! Modules:
//! - [`numeric`]: grids, DFT, Gamma function, quadrature, power-law fits
//! - [`symbols`]: multiplier symbols and the singular-integral constant
//! - [`operators`]: multiplier and PV-integral application, cross-validation
//! - [`halfspace`]: order-reducing operators, model solver, traces
//! - [`dirichlet`]: interval Galerkin system, eigenpairs, boundary identities
//! - [`heat`]: fractional heat flow and regularity probes
//! - [`levy`]: stable-process Monte Carlo
//! - [`experiments`]: batch runner behind the `fraclab` binary

pub mod dirichlet;
pub mod error;
pub mod experiments;
pub mod halfspace;
pub mod heat;
pub mod levy;
pub mod numeric;
pub mod operators;
pub mod symbols;

pub use error::{FracError, Result};
pub use numeric::{FractionalOrder, SampledFunction, UniformGrid1D};

//! Meshfree kernel-based collocation solver for Zakai stochastic partial
//! differential equations.
//!
//! The library discretizes equations of the form
//!
//! ```text
//! du(t,x) = L₀ u(t,x) dt + Σₖ Lₖ u(t,x) dWₖ(t)
//! ```
//!
//! in space with symmetric kernel collocation on a scattered point set and in
//! time with an explicit stochastic Euler recursion. It ships:
//!
//! - exact generation and evaluation of compactly supported piecewise-polynomial
//!   radial kernels ([`kernels`]),
//! - collocation grids and geometry diagnostics ([`grid`]),
//! - symmetric interpolation systems, cardinal functions, and a sparsity
//!   diagnostic for the inverse interpolation matrix ([`interpolation`]),
//! - the differential-operator model layer ([`models`]),
//! - the stochastic collocation time stepper ([`solver`]),
//! - an implicit-Euler finite-difference baseline ([`fd_baseline`]),
//! - reproducible experiment drivers with CSV/JSON outputs ([`experiments`]).

pub mod error;
pub mod experiments;
pub mod fd_baseline;
pub mod grid;
pub mod interpolation;
pub mod kernels;
pub mod models;
pub mod solver;

pub use error::{Error, Result};

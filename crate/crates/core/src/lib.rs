//! Dense-matrix laboratory for preparing Gibbs states with random promised
//! Davies generators.
//!
//! Every object is an explicit complex matrix: Hamiltonians, coupling
//! operators, jump operators and the `d² × d²` superoperators built from them.
//! The crate is `no_std` (with `alloc`) so that the numerical core carries no
//! IO; file formats, configuration and the command-line runner live in the
//! companion `promised-davies` crate.
//!
//! Module map:
//!
//! * [`numerics`]: Hermitian eigendecomposition, functional calculus,
//!   superoperator assembly, matrix exponential, stationary states, gaps,
//!   trace norm and fidelity.
//! * [`models`]: transverse-field Ising, adversarial and random Hamiltonians
//!   normalized to the unit interval.
//! * [`promises`]: rounding promises and the fine/coarse-grained families.
//! * [`specfun`]: exact and polynomial spectral profiles (step functions,
//!   projection polynomials, attenuation, left-right and bit profiles).
//! * [`davies`]: ideal and promised Davies generators, gap sweeps, mixing
//!   times, perturbation checks and the query-count calculator.
//! * [`protocol`]: left-right POVM, majority selection, promised Gibbs states,
//!   ensemble bounds and the end-to-end protocol.
//! * [`approxdavies`]: phase-estimation kernels, median amplification and the
//!   approximate Davies generator on adversarial spectra.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x <= tol)` is intentional: NaN must fail a tolerance check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod approxdavies;
pub mod davies;
mod error;
pub mod models;
pub mod numerics;
pub mod promises;
pub mod protocol;
pub mod random;
pub mod specfun;

pub use error::{Error, Result};
pub use numerics::{CMatrix, DensityMatrix, Spectrum, Superoperator, C64};

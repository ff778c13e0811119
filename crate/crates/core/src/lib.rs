//! Classical and quantum mechanics of screened Coulomb and screened isotropic
//! oscillator systems on a two-sphere, written in gnomonic-projection
//! coordinates.
//!
//! - [`geometry`]: embedded, spherical, polar and gnomonic coordinates.
//! - [`dynamics`]: Hamiltonian flow, adaptive integration, turning points,
//!   closed-form orbits and closure.
//! - [`conserved`]: extended Runge–Lenz and quadrupole quantities, a Poisson
//!   bracket engine, and algebra and turning-point checks.
//! - [`spectra`]: analytic energies, oscillator eigenfunctions and a
//!   finite-difference radial eigensolver.
//! - [`cli`]: the `gnomon` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conserved;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod numeric;
pub mod spectra;

pub use error::{Error, Result};

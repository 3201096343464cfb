//! Spherically symmetric compressible Navier–Stokes–Poisson simulation in
//! Lagrangian mass coordinates.
//!
//! The crate is `no_std` (with `alloc`) and holds every numerical piece:
//! model constants and critical masses, the approximate initial-data
//! construction, the free-boundary solver, Eulerian reconstruction of the
//! potential and energies, weak entropy pairs, and run diagnostics. IO,
//! configuration and parallel sweeps live in the `nsp` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
// With `std` the inherent float methods shadow the `Float` trait imports.
#![cfg_attr(any(feature = "std", test), allow(unused_imports))]

extern crate alloc;

pub mod constants;
pub mod entropy;
mod error;
pub mod fields;
pub mod initdata;
pub mod interp;
pub mod monitor;
pub mod quadrature;
pub mod solver;
pub mod special;

pub use constants::ModelParams;
pub use error::{Error, Result};

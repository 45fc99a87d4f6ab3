//! Ground states of Schrödinger operators `−Δ + V` with confining `V`:
//! finite-difference eigensolvers, closed-form heat and resolvent kernels,
//! Feynman–Kac Monte Carlo, and windowed checks of two-sided exponential
//! decay envelopes.
//!
//! The crate is `no_std` with `alloc`. File formats and the command-line
//! front end live in the `gsdecay` binary crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Series coefficients are kept at the digits they are published with.
#![allow(clippy::excessive_precision)]

extern crate alloc;

pub mod error;
pub mod feynman_kac;
pub mod kernels;
pub mod linalg;
pub mod potentials;
pub mod special;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use potentials::{PotentialKind, PotentialSpec, RadialProfile, ScanWindow};
pub use spectral::{GridSpec, GroundState, SolverOptions};

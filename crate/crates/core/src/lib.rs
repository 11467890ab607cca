//! Finite-time quantum Otto engine with a driven spin-1/2 working medium.
//!
//! The crate is `no_std` (it needs `alloc` for distributions and sweeps) and
//! covers the whole physics pipeline:
//!
//! - [`spin`]: Pauli algebra, drive Hamiltonians, Gibbs states and unit conventions.
//! - [`propagator`]: time-ordered unitaries and eigenstate transition probabilities.
//! - [`tpm`]: two-point-measurement work and heat statistics.
//! - [`cycle`]: the four-stroke cycle, efficiency, efficiency lag, power and
//!   Monte Carlo error propagation.
//! - [`process`]: Choi matrices of the drive maps and channel diagnostics.
//!
//! Energies are in peV, frequencies in kHz and times in µs throughout.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cycle;
pub mod error;
pub mod process;
pub mod propagator;
pub mod spin;
pub mod tpm;

pub use error::{Error, Result};

/// Complex scalar used for every matrix in the crate.
pub type C64 = num_complex::Complex<f64>;

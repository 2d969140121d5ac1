//! Simulation and analysis core for physical-layer secret key agreement
//! between two users over a multipath channel, where one user transmits
//! through a ring antenna whose element phases are re-randomized for every
//! key interval.
//!
//! The crate is `no_std` (it needs `alloc`). Every random quantity is drawn
//! from a caller-supplied RNG, so results are reproducible from a seed; the
//! [`seed`] module derives independent per-block streams from one master seed.
//!
//! Layout, bottom-up:
//!
//! * [`antenna`]: ring array diagram and random excitations.
//! * [`channel`]: three-ray image-source geometry, received quadratures,
//!   reciprocity and receiver noise.
//! * [`functionals`]: envelope, phase and phase-difference statistics.
//! * [`stats`]: correlation, bit-disagreement probability, distribution fits.
//! * [`keygen`]: bit quantization, reliability selection, error measurement,
//!   Toeplitz privacy amplification.
//! * [`security`]: Rényi information, leakage and decoding-error bounds.
//! * [`reconcile`]: syndrome reconciliation used by the end-to-end protocol.
//! * [`source`]: synthetic and physical generators of aligned functional runs.
//! * [`optimizer`]: key-rate maximization over selection parameters.
//! * [`protocol`]: one end-to-end key agreement.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod antenna;
pub mod channel;
mod error;
pub mod functionals;
pub mod keygen;
pub mod optimizer;
pub mod protocol;
pub mod reconcile;
pub mod security;
pub mod seed;
pub mod source;
pub mod stats;

pub use error::{Error, Result};

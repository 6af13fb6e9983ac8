//! Perturbative expansion of the disorder-averaged resolvent and the smoothed
//! density of states for a Schrödinger operator on a periodic box with a
//! Poisson random potential, together with a brute-force spectral oracle.

pub mod cli;
pub mod config;
pub mod disorder;
pub mod dos;
pub mod error;
pub mod expansion;
pub mod lattice;
pub mod oracle;
pub mod partitions;
pub mod profile;
pub mod quadrature;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};

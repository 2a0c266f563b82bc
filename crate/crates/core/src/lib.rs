//! Integer factorization with fractional-power-encoded phasor hypervectors.

pub mod cli;
pub mod codebook;
pub mod error;
pub mod experiments;
pub mod fpe;
pub mod hrr;
pub mod io;
mod kernel;
pub mod resonator;
pub mod primes;
pub mod rng;

pub use error::{Error, Result};

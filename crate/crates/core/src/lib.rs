//! Quantum capacity witnesses for correlated two-qubit Pauli channels.

pub mod capacity;
pub mod channels;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod measure;
pub mod optim;
pub mod qmath;
pub mod witness;

pub use error::{Error, Result};

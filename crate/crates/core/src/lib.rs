//! Toolkit for studying Pauli check sandwiching on noisy entanglement
//! distribution: Pauli algebra, a stabilizer simulator, an exact density
//! matrix oracle, protocol circuit builders, closed-form purification
//! models, stabilizer code certification and graph-state loss handling.

pub mod error;
pub mod pauli;

pub use error::{Error, Result};
pub use pauli::{Pauli, PauliString};
pub mod dense;
pub mod noise;
pub mod circuit;
pub mod tableau;
pub mod engine;
pub mod oracle;
pub mod protocols;
pub mod analytic;
pub mod code;
pub mod clifford1;
pub mod graph;
pub mod lab;

//! Dissipation-induced synchronization of harmonic oscillators that share
//! leaking two-level systems.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod metrics;
pub mod model;
pub mod scenario;
pub mod slmp;

pub use error::{Error, Result};

//! l0-LMS sparse adaptive filtering: filter kernels, closed-form MSD theory
//! and a seeded Monte Carlo harness.

pub mod algorithms;
pub mod error;
pub mod quadrature;
pub mod simulation;
pub mod theory;

pub use error::{Error, Result};

//! Pseudo-spectral solver for the chemotaxis-Navier-Stokes system on a periodic
//! box, with scale-invariant local diagnostics, local energy checks, partial
//! regularity criteria, and covering estimates of flagged space-time sets.

pub mod config;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod fields;
pub mod hausdorff;
pub mod pressure;
pub mod quadrature;
pub mod regularity;
pub mod solver;

pub use error::{CnsError, Result};

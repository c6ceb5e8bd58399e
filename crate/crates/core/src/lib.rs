//! Sequential discrimination of two-qubit orthogonal pure states with
//! unsharp local measurements.
//!
//! The crate is organized bottom-up: [`linalg`] holds the dense 2x2/4x4
//! kernel, [`states`] and [`measurement`] build ensembles and POVMs,
//! [`protocol`] runs the sequential rounds, [`entanglement`] evaluates
//! witnesses and log-negativity, and [`analysis`] contains the parameter
//! scans and correlator recursion.

pub mod analysis;
pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod oracle;
pub mod parallel;
pub mod protocol;
pub mod states;

pub use error::{Error, Result};

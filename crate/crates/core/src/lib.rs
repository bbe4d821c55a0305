//! Multiscale information decomposition of VARFI processes.
//!
//! Models with short-term VAR dynamics and per-channel fractional
//! integration are truncated to finite VAR form, rescaled to coarser time
//! scales through FIR filtering and state-space decimation, and analysed
//! with exact Gaussian transfer entropies and their interaction (IID) and
//! minimum-mutual-information (PID) decompositions.

pub mod cli;
pub mod error;
pub mod estimation;
pub mod infodecomp;
pub mod io;
pub mod linalg;
pub mod model;
pub mod multiscale;
pub mod riccati;
pub mod simulate;

pub use error::{Error, Result};

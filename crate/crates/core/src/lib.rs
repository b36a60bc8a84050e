//! Heart-rate estimation from wrist photoplethysmography under motion.
//!
//! Each analysis window is bandpassed, the accelerometer-correlated part of
//! the PPG is removed by a three-stage adaptive cascade, an SSA branch drops
//! motion components, the two results are conditionally summed, and a
//! tracker picks the spectral peak near the previous estimate.

pub mod adaptive;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod fusion;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod ssa;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};

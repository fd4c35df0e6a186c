//! Sparse variable-step-size NLMS channel estimation.
//!
//! * [`algorithms`]: the six NLMS update rules (ISS/VSS step policy times
//!   no/ZA/RZA penalty), the a-priori error and the stop rule.
//! * [`signal_model`]: sparse unit-norm channels, PN training windows and
//!   noisy observations.
//! * [`metrics`]: channel MSE, steady-state excess-MSE theory, effective SNR
//!   and exponential-fit BER for M-PSK / square M-QAM.
//! * [`experiment`]: seeded Monte-Carlo runner, config files and CSV/SVG
//!   output.
//! * [`cli`]: the `sparse-vss` command line.

pub mod algorithms;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod signal_model;

pub use error::{Error, Result};

//! Energy-efficiency analysis of the massive-MIMO uplink with finite-resolution ADCs.
//!
//! The crate is organised bottom-up:
//!
//! - [`quantizer`]: uniform mid-rise quantizer, pseudo-quantization-noise (PQN) variance and
//!   Monte Carlo distortion statistics on Gaussian inputs.
//! - [`calibration`]: AGC input-backoff calibration against a PQN deviation criterion, the
//!   linear chord through the calibrated endpoints and the calibration table file.
//! - [`uplink`]: channel draws, AGC, pilot-based least-squares estimation, MRC/ZF combining,
//!   per-user SINQR and the ergodic sumrate, with a bit-true hardware quantizer oracle.
//! - [`power`]: pipeline-ADC power bound, architecture-factor total power and bits/Joule.
//! - [`sweep`]: deterministic parallel parameter sweeps and optimum extraction.
//! - [`cli`]: configuration files, CSV output and the `qmimo` command-line front end.
//!
//! Runnable walkthroughs for each capability live under `examples/`.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod power;
pub mod quantizer;
pub mod rng;
pub mod sweep;
pub mod uplink;

pub use error::{Error, Result};

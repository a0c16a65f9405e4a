//! Experiment harness around `stcsf-core`: an FFT backend, synthetic
//! dataset generation, stack files, configuration, parallel trials, sweeps
//! and result reporting.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod fft;
pub mod generate;
pub mod io;
pub mod report;
pub mod runner;
pub mod sweep;

pub use error::{Result, SimError};

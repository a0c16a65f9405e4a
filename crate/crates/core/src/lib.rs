//! Spatio-temporal contrast sensitivity filtering of image stacks and a
//! multi-slice channelized Hotelling observer for virtual detection trials.
//!
//! The crate is `no_std` and only needs `alloc`. Anything touching the file
//! system, threads or a concrete FFT library lives in `stcsf-sim`; here the
//! 3D transform is abstracted by [`fft::Transform3`].

#![no_std]
#![warn(rust_2018_idioms, missing_copy_implementations, unused_qualifications)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected along with
// non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod csf;
pub mod display;
mod error;
pub mod fft;
pub mod observer;
pub mod percept;
pub mod stacks;
pub mod trial;

pub use error::{Error, Result};

//! Core of the tiny residual makeup pipeline.
//!
//! Everything in this crate is pure computation on in-memory tensors and runs
//! without `std`: dense rank-4 tensor kernels with hand-derived backward passes,
//! the 14-convolution residual network, its losses and Adam trainer, the
//! residual-composition algebra used to amplify paired data, a procedural
//! generator of synthetic faces with exact masks, and evaluation metrics.
//!
//! File formats, the command line and the latency benchmark live in the
//! `tinybeauty` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod amplifier;
pub mod error;
pub mod metrics;
pub mod net;
pub mod ops;
pub mod real;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use real::Real;
pub use tensor::{Shape, Tensor};

//! File formats, dataset tooling, evaluation and benchmarking around
//! [`tinybeauty_core`], plus the `tinybeauty` command line.

pub mod bench;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod history;
pub mod image_io;
pub mod weights_io;

pub use error::{Error, Result};
pub use tinybeauty_core as core;

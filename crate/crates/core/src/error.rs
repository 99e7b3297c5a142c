use alloc::string::String;

use crate::tensor::Shape;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch, expected {expected}, got {got}")]
    ShapeMismatch {
        op: &'static str,
        expected: Shape,
        got: Shape,
    },
    #[error("{op}: buffer of length {len} does not match shape {shape}")]
    BufferLength {
        op: &'static str,
        shape: Shape,
        len: usize,
    },
    #[error("{op}: input is {h}x{w}, height and width must be divisible by {divisor}")]
    IndivisibleDims {
        op: &'static str,
        h: usize,
        w: usize,
        divisor: usize,
    },
    #[error("{op}: {h}x{w} input is smaller than the {k}x{k} kernel")]
    TooSmall {
        op: &'static str,
        h: usize,
        w: usize,
        k: usize,
    },
    #[error("{op}: {msg}")]
    InvalidArgument { op: &'static str, msg: String },
    #[error("unknown style id {0}")]
    UnknownStyle(u32),
    #[error("mask selects no pixels")]
    EmptyMask,
    #[error("dataset is empty")]
    EmptyDataset,
}

impl Error {
    pub(crate) fn invalid(op: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidArgument {
            op,
            msg: msg.into(),
        }
    }
}

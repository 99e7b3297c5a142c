//! Differentiable kernels. Each forward op has a hand-derived backward op.

pub mod activation;
pub mod conv;
pub mod norm;
pub mod resize;
pub mod sobel;

#[cfg(test)]
pub(crate) mod testutil;

pub use activation::{relu_backward, relu_forward};
pub use conv::{conv2d_backward, conv2d_forward, ConvGrads, ConvSpec};
pub use norm::{instance_norm_backward, instance_norm_forward, InstanceNormCache, NormGrads};
pub use resize::{resize, resize_nearest_backward, ResizeMode};
pub use sobel::{sobel, sobel_backward};

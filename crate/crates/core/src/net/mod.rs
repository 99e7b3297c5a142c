//! The tiny residual makeup network: a 14-convolution U-Net that predicts an
//! additive makeup residual rather than the made-up image itself.

pub mod config;
pub mod model;
pub mod weights;

pub use config::{build_default, LayerDesc, NetworkConfig, Stage, IMAGE_CHANNELS, RESIDUAL_BLOCKS, SIZE_DIVISOR};
pub use model::{apply_residual, forward, infer, forward_with_grads, ForwardTrace, Gradients, NORM_EPS};
pub use weights::{init_weights, NetworkWeights, Param};

/// Exact scalar parameter count.
pub fn param_count<T: crate::Real>(weights: &NetworkWeights<T>) -> usize {
    weights.param_count()
}

/// Analytic FLOPs of one forward pass at `h × w`; see [`NetworkConfig::flops_estimate`].
pub fn flops_estimate(config: &NetworkConfig, h: usize, w: usize) -> u64 {
    config.flops_estimate(h, w)
}

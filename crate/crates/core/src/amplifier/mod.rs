//! Residual composition algebra used to amplify a few seed pairs into a
//! paired training set.
//!
//! A denoiser `F` supplies a plain branch `F(x)` and a styled branch
//! `F(x, c)`. Their difference is the makeup residual, `x − F(x)` the detail
//! residual, and the styled portrait is `F(x) + λ_m·R_m + λ_d·R_d`.

pub mod denoiser;
pub mod masks;
pub mod rdm;

pub use denoiser::{gaussian_blur, gaussian_kernel, ConditionPayload, Denoiser, GaussianDenoiser, IdentityDenoiser, ProceduralDenoiser};
pub use masks::{changed_mask, MaskSet};
pub use rdm::{
    amplify_one, amplify_pairs, compose, compose_unclamped, detail_residual, latent_blend, makeup_residual, masked_mse,
    AmplifiedPair, RdmConfig,
};

use alloc::string::String;
use alloc::vec::Vec;

use super::denoiser::{ConditionPayload, Denoiser};
use super::masks::{changed_mask, MaskSet};
use crate::error::{Error, Result};
use crate::ops::{resize, ResizeMode};
use crate::synth::{pair_id, SeedFace};
use crate::tensor::{check_mask, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdmConfig {
    pub lambda_m: f64,
    pub lambda_d: f64,
}

impl Default for RdmConfig {
    fn default() -> Self {
        RdmConfig {
            lambda_m: 1.0,
            lambda_d: 0.8,
        }
    }
}

impl RdmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_m.is_finite() && self.lambda_d.is_finite()) {
            return Err(Error::invalid("rdm", "lambda_m and lambda_d must be finite"));
        }
        Ok(())
    }
}

fn same_shape(a: &Tensor, b: &Tensor, op: &'static str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op,
            expected: a.shape(),
            got: b.shape(),
        });
    }
    Ok(())
}

/// `R_d = x − F(x)`.
pub fn detail_residual(x: &Tensor, denoiser: &impl Denoiser) -> Result<Tensor> {
    let f = denoiser.denoise(x, None)?;
    same_shape(x, &f, "detail_residual")?;
    x.sub(&f)
}

/// `R_m = F(x, c) − F(x)`.
pub fn makeup_residual(x: &Tensor, denoiser: &impl Denoiser, cond: &ConditionPayload) -> Result<Tensor> {
    let styled = denoiser.denoise(x, Some(cond))?;
    let plain = denoiser.denoise(x, None)?;
    same_shape(x, &styled, "makeup_residual")?;
    styled.sub(&plain)
}

/// `F(x) + λ_m·R_m + λ_d·R_d` before clamping.
///
/// Evaluated as `x + λ_m·R_m + (λ_d − 1)·R_d`, which is the same affine
/// combination but reproduces `x` exactly when `λ_m = 0, λ_d = 1`.
pub fn compose_unclamped(x: &Tensor, denoiser: &impl Denoiser, cond: &ConditionPayload, rdm: &RdmConfig) -> Result<Tensor> {
    rdm.validate()?;
    let styled = denoiser.denoise(x, Some(cond))?;
    let plain = denoiser.denoise(x, None)?;
    same_shape(x, &styled, "compose")?;
    same_shape(x, &plain, "compose")?;
    let (lm, ld) = (rdm.lambda_m as f32, (rdm.lambda_d - 1.0) as f32);
    let mut y = x.clone();
    for ((v, &s), (&p, &xv)) in y.data_mut().iter_mut().zip(styled.data()).zip(plain.data().iter().zip(x.data())) {
        let r_m = s - p;
        let r_d = xv - p;
        *v = xv + lm * r_m + ld * r_d;
    }
    Ok(y)
}

/// [`compose_unclamped`] clamped to `[0, 1]`.
pub fn compose(x: &Tensor, denoiser: &impl Denoiser, cond: &ConditionPayload, rdm: &RdmConfig) -> Result<Tensor> {
    Ok(compose_unclamped(x, denoiser, cond, rdm)?.clamp(0.0, 1.0))
}

/// `styled ⊙ M + original ⊙ (1 − M)` with a single-channel mask broadcast
/// over channels, resized (nearest) when its grid differs from the images'.
/// Pixels with `M = 0` or `M = 1` copy the corresponding input exactly.
pub fn latent_blend(styled: &Tensor, original: &Tensor, mask: &Tensor) -> Result<Tensor> {
    same_shape(styled, original, "latent_blend")?;
    let s = styled.shape();
    let resized;
    let mask = if (mask.shape().h, mask.shape().w) != (s.h, s.w) {
        resized = resize(mask, s.h, s.w, ResizeMode::Nearest)?;
        &resized
    } else {
        mask
    };
    check_mask(s, mask.shape(), "latent_blend")?;
    let mut out = original.clone();
    for n in 0..s.n {
        let m = mask.plane(if mask.shape().n == 1 { 0 } else { n }, 0);
        for c in 0..s.c {
            let sp = styled.plane(n, c);
            for (i, o) in out.plane_mut(n, c).iter_mut().enumerate() {
                *o = match m[i] {
                    v if v == 0.0 => *o,
                    v if v == 1.0 => sp[i],
                    v => *o + v * (sp[i] - *o),
                };
            }
        }
    }
    Ok(out)
}

/// Mean over all elements of `mask ⊙ (pred − target)²`.
pub fn masked_mse(pred: &Tensor, target: &Tensor, mask: &Tensor) -> Result<f64> {
    same_shape(pred, target, "masked_mse")?;
    check_mask(pred.shape(), mask.shape(), "masked_mse")?;
    let s = pred.shape();
    let mut sum = 0.0;
    for n in 0..s.n {
        let m = mask.plane(if mask.shape().n == 1 { 0 } else { n }, 0);
        for c in 0..s.c {
            for ((&p, &t), &mv) in pred.plane(n, c).iter().zip(target.plane(n, c)).zip(m) {
                let d = p as f64 - t as f64;
                sum += mv as f64 * d * d;
            }
        }
    }
    Ok(sum / s.numel() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmplifiedPair {
    pub id: String,
    pub face_seed: u64,
    pub style_id: u32,
    pub input: Tensor,
    pub target: Tensor,
    pub masks: MaskSet,
}

/// The styled image of one face: the composed portrait blended back into the
/// original outside the changed region.
pub fn amplify_one(face: &SeedFace, style_id: u32, rdm: &RdmConfig, denoiser: &impl Denoiser) -> Result<Tensor> {
    let cond = ConditionPayload::new(style_id, face.masks.clone(), 1.0)?;
    let composed = compose(&face.image, denoiser, &cond, rdm)?;
    latent_blend(&composed, &face.image, &changed_mask(&face.masks))
}

/// Every seed face with every style, face-major.
pub fn amplify_pairs(seeds: &[SeedFace], style_ids: &[u32], rdm: &RdmConfig, denoiser: &impl Denoiser) -> Result<Vec<AmplifiedPair>> {
    if seeds.is_empty() {
        return Err(Error::invalid("amplify", "no seed faces"));
    }
    if style_ids.is_empty() {
        return Err(Error::invalid("amplify", "no styles"));
    }
    let mut out = Vec::with_capacity(seeds.len() * style_ids.len());
    for face in seeds {
        for &style_id in style_ids {
            out.push(AmplifiedPair {
                id: pair_id(face.face_seed, style_id),
                face_seed: face.face_seed,
                style_id,
                input: face.image.clone(),
                target: amplify_one(face, style_id, rdm, denoiser)?,
                masks: face.masks.clone(),
            });
        }
    }
    Ok(out)
}

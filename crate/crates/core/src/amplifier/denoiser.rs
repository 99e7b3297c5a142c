use alloc::vec::Vec;

use super::masks::MaskSet;
use crate::error::{Error, Result};
use crate::synth::{find_style, paint_makeup, StyleSpec};
use crate::tensor::Tensor;

/// Conditioning handed to the styled branch of a denoiser.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionPayload {
    pub style_id: u32,
    pub masks: MaskSet,
    /// In `[0, 1]`.
    pub strength: f64,
}

impl ConditionPayload {
    pub fn new(style_id: u32, masks: MaskSet, strength: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(Error::invalid("condition", alloc::format!("strength must lie in [0, 1], got {strength}")));
        }
        Ok(ConditionPayload { style_id, masks, strength })
    }

    fn check(&self, image: &Tensor) -> Result<()> {
        let want = image.shape().with_channels(1);
        if self.masks.face().shape() != want {
            return Err(Error::ShapeMismatch {
                op: "denoise",
                expected: want,
                got: self.masks.face().shape(),
            });
        }
        Ok(())
    }
}

/// `F(x)` without conditioning, `F(x, c)` with it. Outputs share the input
/// shape and lie in `[0, 1]`; the same inputs always give the same output.
pub trait Denoiser {
    fn denoise(&self, image: &Tensor, cond: Option<&ConditionPayload>) -> Result<Tensor>;
}

/// Returns its input unchanged, with or without conditioning.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityDenoiser;

impl Denoiser for IdentityDenoiser {
    fn denoise(&self, image: &Tensor, _cond: Option<&ConditionPayload>) -> Result<Tensor> {
        Ok(image.clone())
    }
}

/// Normalized Gaussian taps truncated at `3σ`; `σ < 1/3` yields the single tap `[1]`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("gaussian_kernel", "sigma must be finite and >= 0"));
    }
    let radius = (3.0 * sigma).floor() as usize;
    if radius == 0 {
        return Ok(alloc::vec![1.0]);
    }
    let taps: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / sum).collect())
}

fn blur_axis(src: &[f32], dst: &mut [f32], h: usize, w: usize, kernel: &[f64], horizontal: bool) {
    let r = kernel.len() / 2;
    let (len, lines) = if horizontal { (w, h) } else { (h, w) };
    let at = |line: usize, i: usize| if horizontal { line * w + i } else { i * w + line };
    for line in 0..lines {
        for i in 0..len {
            let center = src[at(line, i)] as f64;
            // centered form keeps flat regions exactly flat
            let mut acc = 0.0;
            for (k, &wk) in kernel.iter().enumerate() {
                let j = (i + k).saturating_sub(r).min(len - 1);
                acc += wk * (src[at(line, j)] as f64 - center);
            }
            dst[at(line, i)] = (center + acc).clamp(0.0, 1.0) as f32;
        }
    }
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(image: &Tensor, sigma: f64) -> Result<Tensor> {
    let kernel = gaussian_kernel(sigma)?;
    if kernel.len() == 1 {
        return Ok(image.clone());
    }
    let s = image.shape();
    let mut out = image.clone();
    let mut tmp = alloc::vec![0.0f32; s.plane()];
    for n in 0..s.n {
        for c in 0..s.c {
            blur_axis(image.plane(n, c), &mut tmp, s.h, s.w, &kernel, true);
            blur_axis(&tmp, out.plane_mut(n, c), s.h, s.w, &kernel, false);
        }
    }
    Ok(out)
}

/// Blurs in both branches and ignores conditioning.
#[derive(Clone, Copy, Debug)]
pub struct GaussianDenoiser {
    pub sigma: f64,
}

impl Denoiser for GaussianDenoiser {
    fn denoise(&self, image: &Tensor, _cond: Option<&ConditionPayload>) -> Result<Tensor> {
        gaussian_blur(image, self.sigma)
    }
}

/// Stand-in for a fine-tuned generator: the plain branch blurs, the styled
/// branch blurs and then paints the requested style with every opacity scaled
/// by the payload strength.
#[derive(Clone, Debug)]
pub struct ProceduralDenoiser {
    pub blur_sigma: f64,
    pub styles: Vec<StyleSpec>,
}

impl ProceduralDenoiser {
    pub fn new(blur_sigma: f64, styles: Vec<StyleSpec>) -> Result<Self> {
        gaussian_kernel(blur_sigma)?;
        for s in &styles {
            s.validate()?;
        }
        Ok(ProceduralDenoiser { blur_sigma, styles })
    }

    /// Pixels a styled branch can reach beyond its masks.
    pub fn blur_radius(&self) -> usize {
        (3.0 * self.blur_sigma).floor() as usize
    }
}

impl Denoiser for ProceduralDenoiser {
    fn denoise(&self, image: &Tensor, cond: Option<&ConditionPayload>) -> Result<Tensor> {
        let base = gaussian_blur(image, self.blur_sigma)?;
        let Some(cond) = cond else { return Ok(base) };
        cond.check(image)?;
        let style = find_style(&self.styles, cond.style_id)?;
        if cond.strength == 0.0 {
            return Ok(base);
        }
        Ok(paint_makeup(&base, &cond.masks, &style.scaled(cond.strength))?.clamp(0.0, 1.0))
    }
}

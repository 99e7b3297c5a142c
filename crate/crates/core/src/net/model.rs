//! Forward pass of the residual network and its reverse-mode gradient.

use alloc::vec::Vec;

use super::config::{LayerDesc, IMAGE_CHANNELS, SIZE_DIVISOR};
use super::weights::{layer_params, LayerParams, NetworkWeights};
use crate::error::{Error, Result};
use crate::ops::{
    conv2d_backward, conv2d_forward, instance_norm_backward, instance_norm_forward, relu_backward,
    relu_forward, resize, resize_nearest_backward, InstanceNormCache, ResizeMode,
};
use crate::real::Real;
use crate::tensor::{Shape, Tensor};

pub const NORM_EPS: f64 = 1e-5;

/// Everything one conv(+norm)(+ReLU) layer needs for its backward pass.
#[derive(Clone, Debug)]
struct LayerTrace<T: Real> {
    input: Tensor<T>,
    norm: Option<InstanceNormCache<T>>,
    /// Input of the trailing ReLU, when the layer has one.
    pre_relu: Option<Tensor<T>>,
}

#[derive(Clone, Debug)]
struct ResidualTrace<T: Real> {
    sum: Tensor<T>,
}

/// Saved activations of one forward pass; `backward` is the gradient closure.
#[derive(Clone, Debug)]
pub struct ForwardTrace<T: Real> {
    layers: Vec<LayerTrace<T>>,
    residuals: Vec<ResidualTrace<T>>,
    /// Shapes fed to the two nearest upsamplings.
    up_inputs: [Shape; 2],
    input_shape: Shape,
}

/// Parameter gradients in [`NetworkWeights::params`] order, plus the gradient
/// with respect to the input image.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T: Real> {
    pub params: Vec<Tensor<T>>,
    pub input: Tensor<T>,
}

fn check_input(image: Shape) -> Result<()> {
    if image.c != IMAGE_CHANNELS {
        return Err(Error::ShapeMismatch {
            op: "forward",
            expected: image.with_channels(IMAGE_CHANNELS),
            got: image,
        });
    }
    if image.h == 0 || image.w == 0 || image.h % SIZE_DIVISOR != 0 || image.w % SIZE_DIVISOR != 0 {
        return Err(Error::IndivisibleDims {
            op: "forward",
            h: image.h,
            w: image.w,
            divisor: SIZE_DIVISOR,
        });
    }
    Ok(())
}

struct Runner<'a, T: Real> {
    weights: &'a NetworkWeights<T>,
    descs: Vec<LayerDesc>,
    params: Vec<LayerParams>,
    trace: Option<Vec<LayerTrace<T>>>,
}

impl<T: Real> Runner<'_, T> {
    fn layer(&mut self, i: usize, input: Tensor<T>) -> Result<Tensor<T>> {
        let (desc, lp) = (&self.descs[i], self.params[i]);
        let w = self.weights;
        let mut y = conv2d_forward(&input, w.tensor(lp.weight), Some(w.tensor(lp.bias).data()), &desc.conv)?;
        let mut norm = None;
        if let Some((g, b)) = lp.norm {
            let (out, cache) = instance_norm_forward(&y, w.tensor(g).data(), w.tensor(b).data(), T::of(NORM_EPS))?;
            y = out;
            norm = Some(cache);
        }
        let mut pre_relu = None;
        if desc.has_relu() {
            let out = relu_forward(&y);
            if self.trace.is_some() {
                pre_relu = Some(y);
            }
            y = out;
        }
        if let Some(t) = self.trace.as_mut() {
            t.push(LayerTrace { input, norm, pre_relu });
        }
        Ok(y)
    }
}

fn run<T: Real>(
    weights: &NetworkWeights<T>,
    image: &Tensor<T>,
    record: bool,
) -> Result<(Tensor<T>, Option<ForwardTrace<T>>)> {
    check_input(image.shape())?;
    let config = weights.config();
    let mut r = Runner {
        weights,
        descs: config.layers(),
        params: layer_params(config),
        trace: record.then(Vec::new),
    };
    let mut residuals = Vec::new();
    let e1 = r.layer(0, image.clone())?;
    let e2 = r.layer(1, e1.clone())?;
    let mut h = r.layer(2, e2.clone())?;
    for b in 0..config.residual_block_count() {
        let t = r.layer(3 + 2 * b, h.clone())?;
        let u = r.layer(4 + 2 * b, t)?;
        let sum = h.add(&u)?;
        h = relu_forward(&sum);
        if record {
            residuals.push(ResidualTrace { sum });
        }
    }
    let up_in1 = h.shape();
    let up = resize(&h, e2.shape().h, e2.shape().w, ResizeMode::Nearest)?;
    let d2 = r.layer(11, up)?.add(&e2)?;
    let up_in2 = d2.shape();
    let up = resize(&d2, e1.shape().h, e1.shape().w, ResizeMode::Nearest)?;
    let d1 = r.layer(12, up)?.add(&e1)?;
    let residual = r.layer(13, d1)?;
    let trace = r.trace.map(|layers| ForwardTrace {
        layers,
        residuals,
        up_inputs: [up_in1, up_in2],
        input_shape: image.shape(),
    });
    Ok((residual, trace))
}

/// Predicts the makeup residual for `image` (`N × 3 × H × W`, H and W divisible by 4).
pub fn forward<T: Real>(weights: &NetworkWeights<T>, image: &Tensor<T>) -> Result<Tensor<T>> {
    Ok(run(weights, image, false)?.0)
}

pub fn forward_with_grads<T: Real>(
    weights: &NetworkWeights<T>,
    image: &Tensor<T>,
) -> Result<(Tensor<T>, ForwardTrace<T>)> {
    let (residual, trace) = run(weights, image, true)?;
    Ok((residual, trace.expect("recorded")))
}

impl<T: Real> ForwardTrace<T> {
    /// Propagates `grad_residual` back through the recorded pass.
    pub fn backward(&self, weights: &NetworkWeights<T>, grad_residual: &Tensor<T>) -> Result<Gradients<T>> {
        let config = weights.config();
        let descs = config.layers();
        let lps = layer_params(config);
        let mut grads: Vec<Tensor<T>> = weights.params().iter().map(|p| Tensor::zeros(p.value.shape())).collect();

        let mut layer_back = |i: usize, g: &Tensor<T>| -> Result<Tensor<T>> {
            let (desc, lp, tr) = (&descs[i], lps[i], &self.layers[i]);
            let mut g = match &tr.pre_relu {
                Some(pre) => relu_backward(g, pre)?,
                None => g.clone(),
            };
            if let (Some(cache), Some((gi, bi))) = (&tr.norm, lp.norm) {
                let ng = instance_norm_backward(&g, cache)?;
                grads[gi].data_mut().copy_from_slice(&ng.gamma);
                grads[bi].data_mut().copy_from_slice(&ng.beta);
                g = ng.input;
            }
            let cg = conv2d_backward(&g, &tr.input, weights.tensor(lp.weight), &desc.conv)?;
            grads[lp.weight] = cg.weights;
            grads[lp.bias].data_mut().copy_from_slice(&cg.bias.expect("all convs carry a bias"));
            Ok(cg.input)
        };

        let g_d1 = layer_back(13, grad_residual)?;
        let g_up = layer_back(12, &g_d1)?;
        let g_d2 = resize_nearest_backward(&g_up, self.up_inputs[1])?;
        let g_up = layer_back(11, &g_d2)?;
        let mut g_h = resize_nearest_backward(&g_up, self.up_inputs[0])?;
        for b in (0..self.residuals.len()).rev() {
            let g_sum = relu_backward(&g_h, &self.residuals[b].sum)?;
            let g_t = layer_back(4 + 2 * b, &g_sum)?;
            let g_branch = layer_back(3 + 2 * b, &g_t)?;
            g_h = g_sum.add(&g_branch)?;
        }
        let g_e2 = layer_back(2, &g_h)?.add(&g_d2)?;
        let g_e1 = layer_back(1, &g_e2)?.add(&g_d1)?;
        let g_x = layer_back(0, &g_e1)?;
        debug_assert_eq!(g_x.shape(), self.input_shape);
        Ok(Gradients { params: grads, input: g_x })
    }
}

/// `clamp(original + strength · residual, 0, 1)`. A residual of a different
/// size is bilinearly resized to the original's resolution first.
pub fn apply_residual<T: Real>(original: &Tensor<T>, residual: &Tensor<T>, strength: T) -> Result<Tensor<T>> {
    let (os, rs) = (original.shape(), residual.shape());
    if os.n != rs.n || os.c != rs.c {
        return Err(Error::ShapeMismatch {
            op: "apply_residual",
            expected: Shape::new(os.n, os.c, rs.h, rs.w),
            got: rs,
        });
    }
    let resized;
    let r = if (rs.h, rs.w) == (os.h, os.w) {
        residual
    } else {
        resized = resize(residual, os.h, os.w, ResizeMode::Bilinear)?;
        &resized
    };
    let mut out = original.clone();
    for (o, &d) in out.data_mut().iter_mut().zip(r.data()) {
        *o = (*o + strength * d).max(T::zero()).min(T::one());
    }
    Ok(out)
}

/// Full inference: `apply_residual(image, forward(image'), strength)` where
/// `image'` is `image` bilinearly resized to `net_hw` when given. The network
/// runs at `net_hw`; its residual is resized back to the image resolution.
pub fn infer<T: Real>(weights: &NetworkWeights<T>, image: &Tensor<T>, strength: T, net_hw: Option<(usize, usize)>) -> Result<Tensor<T>> {
    let s = image.shape();
    let residual = match net_hw {
        Some((h, w)) if (h, w) != (s.h, s.w) => forward(weights, &resize(image, h, w, ResizeMode::Bilinear)?)?,
        _ => forward(weights, image)?,
    };
    apply_residual(image, &residual, strength)
}

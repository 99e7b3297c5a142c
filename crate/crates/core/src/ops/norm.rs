//! Instance normalization: per-sample, per-channel standardization followed by
//! a learned per-channel affine map.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Statistics saved by the forward pass. `mean`, `var` and `inv_std` are
/// indexed `n * c + channel`.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceNormCache<T: Real> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub inv_std: Vec<T>,
    /// Pre-affine normalized activations.
    pub normalized: Tensor<T>,
    pub gamma: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormGrads<T: Real> {
    pub input: Tensor<T>,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

pub fn instance_norm_forward<T: Real>(
    x: &Tensor<T>,
    gamma: &[T],
    beta: &[T],
    eps: T,
) -> Result<(Tensor<T>, InstanceNormCache<T>)> {
    let s = x.shape();
    if !(eps > T::zero()) {
        return Err(Error::invalid("instance_norm", "eps must be > 0"));
    }
    if gamma.len() != s.c || beta.len() != s.c {
        return Err(Error::invalid(
            "instance_norm",
            alloc::format!(
                "gamma/beta have {}/{} entries for {} channels",
                gamma.len(),
                beta.len(),
                s.c
            ),
        ));
    }
    let count = T::of(s.plane() as f64);
    let mut y = Tensor::zeros(s);
    let mut normalized = Tensor::zeros(s);
    let mut mean = Vec::with_capacity(s.n * s.c);
    let mut var = Vec::with_capacity(s.n * s.c);
    let mut inv_std = Vec::with_capacity(s.n * s.c);
    for n in 0..s.n {
        for c in 0..s.c {
            let plane = x.plane(n, c);
            // Shifting by the first element keeps a constant plane's mean exact.
            let shift = plane[0];
            let mu = shift + plane.iter().map(|&v| v - shift).sum::<T>() / count;
            let v = plane.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / count;
            let k = T::one() / (v + eps).sqrt();
            for (o, &xv) in normalized.plane_mut(n, c).iter_mut().zip(plane) {
                *o = (xv - mu) * k;
            }
            for (o, &nv) in y.plane_mut(n, c).iter_mut().zip(normalized.plane(n, c)) {
                *o = gamma[c] * nv + beta[c];
            }
            mean.push(mu);
            var.push(v);
            inv_std.push(k);
        }
    }
    Ok((
        y,
        InstanceNormCache {
            mean,
            var,
            inv_std,
            normalized,
            gamma: gamma.to_vec(),
        },
    ))
}

/// `dx = γ·k · (dy − mean(dy) − x̂ · mean(dy · x̂))` per plane, with `k = 1/σ`.
pub fn instance_norm_backward<T: Real>(
    grad_out: &Tensor<T>,
    saved: &InstanceNormCache<T>,
) -> Result<NormGrads<T>> {
    let s = saved.normalized.shape();
    if grad_out.shape() != s {
        return Err(Error::ShapeMismatch {
            op: "instance_norm_backward",
            expected: s,
            got: grad_out.shape(),
        });
    }
    let count = T::of(s.plane() as f64);
    let mut gx = Tensor::zeros(s);
    let mut gg = vec![T::zero(); s.c];
    let mut gb = vec![T::zero(); s.c];
    for n in 0..s.n {
        for c in 0..s.c {
            let dy = grad_out.plane(n, c);
            let xh = saved.normalized.plane(n, c);
            let sum_dy: T = dy.iter().copied().sum();
            let sum_dy_xh: T = dy.iter().zip(xh).map(|(&a, &b)| a * b).sum();
            gg[c] += sum_dy_xh;
            gb[c] += sum_dy;
            let scale = saved.gamma[c] * saved.inv_std[n * s.c + c];
            let (m_dy, m_dy_xh) = (sum_dy / count, sum_dy_xh / count);
            for ((o, &d), &h) in gx.plane_mut(n, c).iter_mut().zip(dy).zip(xh) {
                *o = scale * (d - m_dy - h * m_dy_xh);
            }
        }
    }
    Ok(NormGrads {
        input: gx,
        gamma: gg,
        beta: gb,
    })
}

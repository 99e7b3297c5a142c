//! Spatial resampling.
//!
//! Bilinear sampling uses half-pixel centers with edge clamping and
//! interpolates as `a + t·(b − a)`, so constant images stay exactly constant.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::{Shape, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResizeMode {
    Nearest,
    Bilinear,
}

#[inline]
fn nearest_src(dst: usize, src_len: usize, dst_len: usize) -> usize {
    // floor((dst + 0.5) * src_len / dst_len)
    (((2 * dst + 1) * src_len) / (2 * dst_len)).min(src_len - 1)
}

fn bilinear_taps<T: Real>(src_len: usize, dst_len: usize) -> Vec<(usize, usize, T)> {
    let scale = src_len as f64 / dst_len as f64;
    (0..dst_len)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_len - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src_len - 1);
            (i0, i1, T::of(s - i0 as f64))
        })
        .collect()
}

pub fn resize<T: Real>(x: &Tensor<T>, new_h: usize, new_w: usize, mode: ResizeMode) -> Result<Tensor<T>> {
    if new_h == 0 || new_w == 0 {
        return Err(Error::invalid("resize", "target dimensions must be >= 1"));
    }
    let s = x.shape();
    if s.h == new_h && s.w == new_w {
        return Ok(x.clone());
    }
    let os = Shape::new(s.n, s.c, new_h, new_w);
    let mut out = Tensor::zeros(os);
    match mode {
        ResizeMode::Nearest => {
            let xs: Vec<usize> = (0..new_w).map(|d| nearest_src(d, s.w, new_w)).collect();
            for n in 0..s.n {
                for c in 0..s.c {
                    let src = x.plane(n, c);
                    let dst = out.plane_mut(n, c);
                    for oy in 0..new_h {
                        let sy = nearest_src(oy, s.h, new_h);
                        for (ox, &sx) in xs.iter().enumerate() {
                            dst[oy * new_w + ox] = src[sy * s.w + sx];
                        }
                    }
                }
            }
        }
        ResizeMode::Bilinear => {
            let ty = bilinear_taps::<T>(s.h, new_h);
            let tx = bilinear_taps::<T>(s.w, new_w);
            for n in 0..s.n {
                for c in 0..s.c {
                    let src = x.plane(n, c);
                    let dst = out.plane_mut(n, c);
                    for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
                        for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                            let a = src[y0 * s.w + x0];
                            let b = src[y0 * s.w + x1];
                            let cc = src[y1 * s.w + x0];
                            let d = src[y1 * s.w + x1];
                            let top = a + fx * (b - a);
                            let bottom = cc + fx * (d - cc);
                            dst[oy * new_w + ox] = top + fy * (bottom - top);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Adjoint of nearest resizing: each output gradient is added to its source pixel.
pub fn resize_nearest_backward<T: Real>(grad_out: &Tensor<T>, input_shape: Shape) -> Result<Tensor<T>> {
    let gs = grad_out.shape();
    if gs.n != input_shape.n || gs.c != input_shape.c {
        return Err(Error::ShapeMismatch {
            op: "resize_nearest_backward",
            expected: Shape::new(input_shape.n, input_shape.c, gs.h, gs.w),
            got: gs,
        });
    }
    let mut g = Tensor::zeros(input_shape);
    let xs: Vec<usize> = (0..gs.w).map(|d| nearest_src(d, input_shape.w, gs.w)).collect();
    for n in 0..gs.n {
        for c in 0..gs.c {
            let src = grad_out.plane(n, c);
            let dst = g.plane_mut(n, c);
            for oy in 0..gs.h {
                let sy = nearest_src(oy, input_shape.h, gs.h);
                for (ox, &sx) in xs.iter().enumerate() {
                    dst[sy * input_shape.w + sx] += src[oy * gs.w + ox];
                }
            }
        }
    }
    Ok(g)
}

//! 3×3 Sobel responses.
//!
//! For each input channel `c` the output holds `g_x` at channel `2c` and `g_y`
//! at `2c + 1`, unnormalized. Borders replicate the edge pixel.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

const KX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const KY: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

#[inline]
fn clamp_idx(i: usize, d: usize, len: usize) -> usize {
    (i + d).saturating_sub(1).min(len - 1)
}

fn check(h: usize, w: usize) -> Result<()> {
    if h < 3 || w < 3 {
        return Err(Error::TooSmall { op: "sobel", h, w, k: 3 });
    }
    Ok(())
}

pub fn sobel<T: Real>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let s = x.shape();
    check(s.h, s.w)?;
    let mut out = Tensor::zeros(s.with_channels(2 * s.c));
    let two = T::of(2.0);
    for n in 0..s.n {
        for c in 0..s.c {
            let p = x.plane(n, c);
            let mut gx = alloc::vec![T::zero(); s.h * s.w];
            let mut gy = alloc::vec![T::zero(); s.h * s.w];
            for y in 0..s.h {
                let (r0, r1, r2) = (clamp_idx(y, 0, s.h) * s.w, y * s.w, clamp_idx(y, 2, s.h) * s.w);
                for xx in 0..s.w {
                    let (c0, c2) = (clamp_idx(xx, 0, s.w), clamp_idx(xx, 2, s.w));
                    // each response is (positive side) - (negative side) with the same
                    // summation order, so flat regions give exactly zero
                    let right = p[r0 + c2] + two * p[r1 + c2] + p[r2 + c2];
                    let left = p[r0 + c0] + two * p[r1 + c0] + p[r2 + c0];
                    let bottom = p[r2 + c0] + two * p[r2 + xx] + p[r2 + c2];
                    let top = p[r0 + c0] + two * p[r0 + xx] + p[r0 + c2];
                    gx[r1 + xx] = right - left;
                    gy[r1 + xx] = bottom - top;
                }
            }
            out.plane_mut(n, 2 * c).copy_from_slice(&gx);
            out.plane_mut(n, 2 * c + 1).copy_from_slice(&gy);
        }
    }
    Ok(out)
}

/// Adjoint of [`sobel`]: maps a `2C`-channel gradient back to the `C`-channel input.
pub fn sobel_backward<T: Real>(grad_out: &Tensor<T>, input_shape: crate::Shape) -> Result<Tensor<T>> {
    let s = input_shape;
    check(s.h, s.w)?;
    if grad_out.shape() != s.with_channels(2 * s.c) {
        return Err(Error::ShapeMismatch {
            op: "sobel_backward",
            expected: s.with_channels(2 * s.c),
            got: grad_out.shape(),
        });
    }
    let mut g = Tensor::zeros(s);
    for n in 0..s.n {
        for c in 0..s.c {
            for (k, kernel) in [KX, KY].iter().enumerate() {
                let src = grad_out.plane(n, 2 * c + k);
                let dst = g.plane_mut(n, c);
                for y in 0..s.h {
                    for xx in 0..s.w {
                        let gv = src[y * s.w + xx];
                        for (dy, krow) in kernel.iter().enumerate() {
                            let row = clamp_idx(y, dy, s.h) * s.w;
                            for (dx, &kv) in krow.iter().enumerate() {
                                if kv != 0.0 {
                                    dst[row + clamp_idx(xx, dx, s.w)] += T::of(kv) * gv;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::testutil::{fd_check, lcg_tensor};
    use crate::tensor::Shape;

    #[test]
    fn constant_image_has_zero_response() {
        let x = Tensor::<f32>::full(Shape::new(1, 3, 6, 5), 0.37);
        assert_eq!(sobel(&x).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn horizontal_ramp_interior() {
        // Convolving [-1 0 1; -2 0 2; -1 0 1] with v = δ·x gives (1+2+1)·2δ = 8δ.
        let delta = 0.03f64;
        let x = Tensor::<f64>::from_fn(Shape::new(1, 1, 6, 7), |_, _, _, c| c as f64 * delta);
        let g = sobel(&x).unwrap();
        for y in 1..5 {
            for c in 1..6 {
                assert!((g.get(0, 0, y, c) - 8.0 * delta).abs() < 1e-12);
                assert!(g.get(0, 1, y, c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_swaps_components() {
        let x: Tensor<f64> = lcg_tensor(Shape::new(1, 1, 5, 7), 2);
        // r(i, j) = x(j, W-1-i): 90° counter-clockwise rotation, shape (W, H).
        let r = Tensor::from_fn(Shape::new(1, 1, 7, 5), |_, _, i, j| x.get(0, 0, j, 6 - i));
        let gx = sobel(&x).unwrap();
        let gr = sobel(&r).unwrap();
        for i in 0..7 {
            for j in 0..5 {
                let (ox, oy) = (gx.get(0, 0, j, 6 - i), gx.get(0, 1, j, 6 - i));
                assert!((gr.get(0, 0, i, j).abs() - oy.abs()).abs() < 1e-12);
                assert!((gr.get(0, 1, i, j).abs() - ox.abs()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn too_small_is_rejected() {
        let x = Tensor::<f32>::zeros(Shape::new(1, 1, 2, 5));
        assert!(matches!(sobel(&x), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let x: Tensor<f64> = lcg_tensor(Shape::new(2, 3, 8, 8), 12);
        let probe: Tensor<f64> = lcg_tensor(Shape::new(2, 6, 8, 8), 13);
        let g = sobel_backward(&probe, x.shape()).unwrap();
        fd_check(&x, &g, 1e-4, |t| {
            sobel(t).unwrap().data().iter().zip(probe.data()).map(|(a, b)| a * b).sum()
        });
    }
}

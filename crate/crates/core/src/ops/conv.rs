//! 2-D cross-correlation with zero padding.
//!
//! Every output element accumulates its terms in `(in_channel, ky, kx)` order
//! starting from zero, then adds the bias. Padded taps contribute `w · 0`, which
//! leaves a finite accumulator's bits unchanged, so the im2col + tiled GEMM path
//! is bit-identical to a naive nested loop that skips them.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::{Shape, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub padding: usize,
    pub has_bias: bool,
}

impl ConvSpec {
    /// 3×3 convolution with padding 1.
    pub const fn k3(in_channels: usize, out_channels: usize, stride: usize) -> Self {
        ConvSpec {
            in_channels,
            out_channels,
            kernel_h: 3,
            kernel_w: 3,
            stride,
            padding: 1,
            has_bias: true,
        }
    }

    pub const fn weight_shape(&self) -> Shape {
        Shape::new(self.out_channels, self.in_channels, self.kernel_h, self.kernel_w)
    }

    pub const fn param_count(&self) -> usize {
        self.weight_shape().numel() + if self.has_bias { self.out_channels } else { 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::invalid("conv2d", "stride must be >= 1"));
        }
        if self.kernel_h % 2 == 0 || self.kernel_w % 2 == 0 {
            return Err(Error::invalid("conv2d", "kernel dimensions must be odd"));
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::invalid("conv2d", "channel counts must be >= 1"));
        }
        Ok(())
    }

    /// Output spatial size for an `h × w` input.
    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (ph, pw) = (h + 2 * self.padding, w + 2 * self.padding);
        if ph < self.kernel_h || pw < self.kernel_w {
            return Err(Error::TooSmall {
                op: "conv2d",
                h,
                w,
                k: self.kernel_h.max(self.kernel_w),
            });
        }
        Ok((
            (ph - self.kernel_h) / self.stride + 1,
            (pw - self.kernel_w) / self.stride + 1,
        ))
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let (oh, ow) = self.output_hw(input.h, input.w)?;
        Ok(Shape::new(input.n, self.out_channels, oh, ow))
    }

    fn check(&self, input: Shape, weights: Shape, bias: Option<usize>) -> Result<()> {
        self.validate()?;
        if input.c != self.in_channels {
            return Err(Error::ShapeMismatch {
                op: "conv2d input",
                expected: input.with_channels(self.in_channels),
                got: input,
            });
        }
        if weights != self.weight_shape() {
            return Err(Error::ShapeMismatch {
                op: "conv2d weights",
                expected: self.weight_shape(),
                got: weights,
            });
        }
        match (self.has_bias, bias) {
            (true, Some(len)) if len == self.out_channels => Ok(()),
            (false, None) => Ok(()),
            (true, Some(len)) => Err(Error::invalid(
                "conv2d",
                alloc::format!("bias has {len} entries, expected {}", self.out_channels),
            )),
            (true, None) => Err(Error::invalid("conv2d", "spec requires a bias")),
            (false, Some(_)) => Err(Error::invalid("conv2d", "spec has no bias")),
        }
    }
}

/// Unfolds one sample into a `(in_c·kh·kw) × (out_h·out_w)` matrix; padded
/// taps are zero.
fn im2col<T: Real>(input: &Tensor<T>, n: usize, spec: &ConvSpec, oh: usize, ow: usize, col: &mut [T]) {
    let is = input.shape();
    let (kh, kw, s, p) = (spec.kernel_h, spec.kernel_w, spec.stride, spec.padding);
    let cols = oh * ow;
    for ic in 0..spec.in_channels {
        let inp = input.plane(n, ic);
        for ky in 0..kh {
            for kx in 0..kw {
                let row = &mut col[((ic * kh + ky) * kw + kx) * cols..][..cols];
                for oy in 0..oh {
                    let dst = &mut row[oy * ow..(oy + 1) * ow];
                    let iy = (oy * s + ky) as isize - p as isize;
                    if iy < 0 || iy >= is.h as isize {
                        dst.fill(T::zero());
                        continue;
                    }
                    let irow = &inp[iy as usize * is.w..(iy as usize + 1) * is.w];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox * s + kx) as isize - p as isize;
                        *d = if ix < 0 || ix >= is.w as isize { T::zero() } else { irow[ix as usize] };
                    }
                }
            }
        }
    }
}

const MR: usize = 4;
const NR: usize = 8;

/// `c = a · b` for row-major `a: m×k`, `b: k×n`. Every element of `c` sums its
/// `k` products sequentially from zero, whatever the tiling.
fn gemm<T: Real>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let mut panel = vec![[T::zero(); NR]; k];
    let mut j = 0;
    while j < n {
        let nr = NR.min(n - j);
        for (dst, brow) in panel.iter_mut().zip(b.chunks_exact(n)) {
            dst[..nr].copy_from_slice(&brow[j..j + nr]);
        }
        let mut i = 0;
        while i < m {
            let mr = MR.min(m - i);
            if mr == MR {
                let rows: [&[T]; MR] = core::array::from_fn(|r| &a[(i + r) * k..(i + r + 1) * k]);
                let mut acc = [[T::zero(); NR]; MR];
                for (kk, bv) in panel.iter().enumerate() {
                    for r in 0..MR {
                        let av = rows[r][kk];
                        for q in 0..NR {
                            acc[r][q] += av * bv[q];
                        }
                    }
                }
                for (r, row) in acc.iter().enumerate() {
                    c[(i + r) * n + j..(i + r) * n + j + nr].copy_from_slice(&row[..nr]);
                }
            } else {
                for r in 0..mr {
                    let arow = &a[(i + r) * k..(i + r + 1) * k];
                    let mut acc = [T::zero(); NR];
                    for (&av, bv) in arow.iter().zip(&panel) {
                        for q in 0..NR {
                            acc[q] += av * bv[q];
                        }
                    }
                    c[(i + r) * n + j..(i + r) * n + j + nr].copy_from_slice(&acc[..nr]);
                }
            }
            i += MR;
        }
        j += NR;
    }
}

/// Dot product with eight interleaved partial sums, combined in a fixed order.
#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut lanes = [T::zero(); 8];
    let (ac, bc) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ar, br) = (ac.remainder(), bc.remainder());
    for (x, y) in ac.zip(bc) {
        for i in 0..8 {
            lanes[i] += x[i] * y[i];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ar.iter().zip(br) {
        tail += x * y;
    }
    ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5])) + ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7])) + tail
}

pub fn conv2d_forward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: Option<&[T]>,
    spec: &ConvSpec,
) -> Result<Tensor<T>> {
    let is = input.shape();
    spec.check(is, weights.shape(), bias.map(<[T]>::len))?;
    let os = spec.output_shape(is)?;
    let k = spec.in_channels * spec.kernel_h * spec.kernel_w;
    let cols = os.plane();
    let mut col = vec![T::zero(); k * cols];
    let mut out = Tensor::zeros(os);
    for n in 0..is.n {
        im2col(input, n, spec, os.h, os.w, &mut col);
        let first = out.index(n, 0, 0, 0);
        let dst = &mut out.data_mut()[first..first + spec.out_channels * cols];
        gemm(spec.out_channels, k, cols, weights.data(), &col, dst);
        if let Some(b) = bias {
            for (oc, &bv) in b.iter().enumerate() {
                for v in dst[oc * cols..(oc + 1) * cols].iter_mut() {
                    *v = *v + bv;
                }
            }
        }
    }
    Ok(out)
}

/// Stride-1 input gradient: correlate the `(k-1-p)`-padded output gradient
/// with the spatially flipped, channel-transposed kernel.
fn input_grad_flipped<T: Real>(grad_out: &Tensor<T>, weights: &Tensor<T>, spec: &ConvSpec, is: Shape) -> Result<Tensor<T>> {
    let (kh, kw, oc_n) = (spec.kernel_h, spec.kernel_w, spec.out_channels);
    let os = grad_out.shape();
    let (ph, pw) = (kh - 1 - spec.padding, kw - 1 - spec.padding);
    let padded = Shape::new(is.n, oc_n, is.h + kh - 1, is.w + kw - 1);
    let mut gpad = Tensor::zeros(padded);
    for n in 0..is.n {
        for oc in 0..oc_n {
            let src = grad_out.plane(n, oc);
            let dst = gpad.plane_mut(n, oc);
            for oy in 0..os.h {
                let start = (oy + ph) * padded.w + pw;
                dst[start..start + os.w].copy_from_slice(&src[oy * os.w..(oy + 1) * os.w]);
            }
        }
    }
    let flipped = Tensor::from_fn(Shape::new(spec.in_channels, oc_n, kh, kw), |ic, oc, ky, kx| {
        weights.get(oc, ic, kh - 1 - ky, kw - 1 - kx)
    });
    let back_spec = ConvSpec {
        in_channels: oc_n,
        out_channels: spec.in_channels,
        kernel_h: kh,
        kernel_w: kw,
        stride: 1,
        padding: 0,
        has_bias: false,
    };
    conv2d_forward(&gpad, &flipped, None, &back_spec)
}

/// Strided input gradient: `Wᵀ · g` as columns, scattered back with col2im.
fn input_grad_col2im<T: Real>(grad_out: &Tensor<T>, weights: &Tensor<T>, spec: &ConvSpec, is: Shape, os: Shape) -> Tensor<T> {
    let (kh, kw, s, p) = (spec.kernel_h, spec.kernel_w, spec.stride, spec.padding);
    let k = spec.in_channels * kh * kw;
    let (oc_n, cols) = (spec.out_channels, os.plane());
    let mut w_t = vec![T::zero(); k * oc_n];
    for (oc, row) in weights.data().chunks_exact(k).enumerate() {
        for (kk, &v) in row.iter().enumerate() {
            w_t[kk * oc_n + oc] = v;
        }
    }
    let mut dcol = vec![T::zero(); k * cols];
    let mut gin = Tensor::zeros(is);
    for n in 0..is.n {
        let g = &grad_out.data()[grad_out.index(n, 0, 0, 0)..][..oc_n * cols];
        gemm(k, oc_n, cols, &w_t, g, &mut dcol);
        for ic in 0..spec.in_channels {
            let plane = gin.plane_mut(n, ic);
            for ky in 0..kh {
                for kx in 0..kw {
                    let row = &dcol[((ic * kh + ky) * kw + kx) * cols..][..cols];
                    for oy in 0..os.h {
                        let iy = (oy * s + ky) as isize - p as isize;
                        if iy < 0 || iy >= is.h as isize {
                            continue;
                        }
                        let grow = &mut plane[iy as usize * is.w..(iy as usize + 1) * is.w];
                        for (ox, &v) in row[oy * os.w..(oy + 1) * os.w].iter().enumerate() {
                            let ix = (ox * s + kx) as isize - p as isize;
                            if ix >= 0 && ix < is.w as isize {
                                grow[ix as usize] += v;
                            }
                        }
                    }
                }
            }
        }
    }
    gin
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvGrads<T: Real> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Option<Vec<T>>,
}

pub fn conv2d_backward<T: Real>(
    grad_out: &Tensor<T>,
    saved_input: &Tensor<T>,
    weights: &Tensor<T>,
    spec: &ConvSpec,
) -> Result<ConvGrads<T>> {
    let is = saved_input.shape();
    spec.check(
        is,
        weights.shape(),
        if spec.has_bias { Some(spec.out_channels) } else { None },
    )?;
    let os = spec.output_shape(is)?;
    if grad_out.shape() != os {
        return Err(Error::ShapeMismatch {
            op: "conv2d_backward grad_out",
            expected: os,
            got: grad_out.shape(),
        });
    }
    let (kh, kw) = (spec.kernel_h, spec.kernel_w);
    let k = spec.in_channels * kh * kw;
    let (oc_n, cols) = (spec.out_channels, os.plane());
    let mut col = vec![T::zero(); k * cols];
    let mut gw = Tensor::zeros(weights.shape());
    let mut gb = if spec.has_bias { Some(vec![T::zero(); oc_n]) } else { None };
    for n in 0..is.n {
        let g = &grad_out.data()[grad_out.index(n, 0, 0, 0)..][..oc_n * cols];
        if let Some(gb) = gb.as_mut() {
            for (oc, b) in gb.iter_mut().enumerate() {
                *b += g[oc * cols..(oc + 1) * cols].iter().copied().sum::<T>();
            }
        }
        im2col(saved_input, n, spec, os.h, os.w, &mut col);
        for (oc, grow) in g.chunks_exact(cols).enumerate() {
            for (kk, crow) in col.chunks_exact(cols).enumerate() {
                gw.data_mut()[oc * k + kk] += dot(grow, crow);
            }
        }
    }

    let gin = if spec.stride == 1 {
        input_grad_flipped(grad_out, weights, spec, is)?
    } else {
        input_grad_col2im(grad_out, weights, spec, is, os)
    };
    Ok(ConvGrads {
        input: gin,
        weights: gw,
        bias: gb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::testutil::{fd_check, lcg_tensor};

    /// Independent reference: plain nested loops over every tap.
    fn naive_conv(input: &Tensor<f32>, w: &Tensor<f32>, bias: Option<&[f32]>, spec: &ConvSpec) -> Tensor<f32> {
        let is = input.shape();
        let oh = (is.h + 2 * spec.padding - spec.kernel_h) / spec.stride + 1;
        let ow = (is.w + 2 * spec.padding - spec.kernel_w) / spec.stride + 1;
        let mut out = Tensor::zeros(Shape::new(is.n, spec.out_channels, oh, ow));
        for n in 0..is.n {
            for oc in 0..spec.out_channels {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = 0.0f32;
                        for ic in 0..spec.in_channels {
                            for ky in 0..spec.kernel_h {
                                for kx in 0..spec.kernel_w {
                                    let iy = (oy * spec.stride + ky) as isize - spec.padding as isize;
                                    let ix = (ox * spec.stride + kx) as isize - spec.padding as isize;
                                    if iy < 0 || ix < 0 || iy >= is.h as isize || ix >= is.w as isize {
                                        continue;
                                    }
                                    acc += w.get(oc, ic, ky, kx) * input.get(n, ic, iy as usize, ix as usize);
                                }
                            }
                        }
                        if let Some(b) = bias {
                            acc += b[oc];
                        }
                        out.set(n, oc, oy, ox, acc);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn ones_kernel_center_sums_to_nine() {
        let x = Tensor::<f32>::full(Shape::new(1, 1, 3, 3), 1.0);
        let w = Tensor::full(Shape::new(1, 1, 3, 3), 1.0);
        let mut spec = ConvSpec::k3(1, 1, 1);
        spec.has_bias = false;
        let y = conv2d_forward(&x, &w, None, &spec).unwrap();
        assert_eq!(y.get(0, 0, 1, 1), 9.0);
        assert_eq!(y.get(0, 0, 0, 0), 4.0);
    }

    #[test]
    fn delta_kernel_is_identity() {
        let x: Tensor<f32> = lcg_tensor(Shape::new(2, 1, 5, 7), 3);
        let mut w = Tensor::zeros(Shape::new(1, 1, 3, 3));
        w.set(0, 0, 1, 1, 1.0);
        let mut spec = ConvSpec::k3(1, 1, 1);
        spec.has_bias = false;
        assert_eq!(conv2d_forward(&x, &w, None, &spec).unwrap(), x);
    }

    #[test]
    fn matches_naive_reference_bit_exactly() {
        for (stride, padding) in [(1, 0), (1, 1), (2, 0), (2, 1)] {
            for (h, w) in [(4, 4), (5, 7), (8, 6)] {
                let spec = ConvSpec {
                    in_channels: 2,
                    out_channels: 3,
                    kernel_h: 3,
                    kernel_w: 3,
                    stride,
                    padding,
                    has_bias: stride == 1,
                };
                let x: Tensor<f32> = lcg_tensor(Shape::new(1, 2, h, w), 11 + h as u64);
                let wt: Tensor<f32> = lcg_tensor(spec.weight_shape(), 5);
                let b = [0.25f32, -0.5, 0.125];
                let bias = spec.has_bias.then_some(&b[..]);
                let got = conv2d_forward(&x, &wt, bias, &spec).unwrap();
                let want = naive_conv(&x, &wt, bias, &spec);
                let same = got.data().iter().zip(want.data()).all(|(a, b)| a.to_bits() == b.to_bits());
                assert!(same, "stride {stride} pad {padding} {h}x{w}");
            }
        }
    }

    #[test]
    fn output_dims_follow_floor_formula() {
        let spec = ConvSpec::k3(1, 1, 2);
        assert_eq!(spec.output_hw(7, 8).unwrap(), (4, 4));
        assert_eq!(ConvSpec { padding: 0, ..spec }.output_hw(7, 8).unwrap(), (3, 3));
    }

    #[test]
    fn shape_errors() {
        let x = Tensor::<f32>::zeros(Shape::new(1, 2, 4, 4));
        let w = Tensor::zeros(Shape::new(1, 3, 3, 3));
        let spec = ConvSpec::k3(3, 1, 1);
        assert!(matches!(
            conv2d_forward(&x, &w, Some(&[0.0]), &spec),
            Err(Error::ShapeMismatch { op: "conv2d input", .. })
        ));
        let x = Tensor::<f32>::zeros(Shape::new(1, 3, 4, 4));
        let bad_w = Tensor::zeros(Shape::new(2, 3, 3, 3));
        assert!(conv2d_forward(&x, &bad_w, Some(&[0.0]), &spec).is_err());
        let y = conv2d_forward(&x, &w, Some(&[0.0]), &spec).unwrap();
        let bad_g = Tensor::zeros(Shape::new(1, 1, 3, 4));
        assert!(conv2d_backward(&bad_g, &x, &w, &spec).is_err());
        assert!(conv2d_backward(&y, &x, &w, &spec).is_ok());
    }

    #[test]
    fn zero_grad_out_gives_zero_grads() {
        let spec = ConvSpec::k3(2, 3, 2);
        let x: Tensor<f64> = lcg_tensor(Shape::new(1, 2, 6, 6), 1);
        let w: Tensor<f64> = lcg_tensor(spec.weight_shape(), 2);
        let g = Tensor::zeros(spec.output_shape(x.shape()).unwrap());
        let grads = conv2d_backward(&g, &x, &w, &spec).unwrap();
        assert_eq!(grads.input.max_abs(), 0.0);
        assert_eq!(grads.weights.max_abs(), 0.0);
        assert!(grads.bias.unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_by_one_weight_grad_closed_form() {
        let spec = ConvSpec {
            in_channels: 1,
            out_channels: 1,
            kernel_h: 1,
            kernel_w: 1,
            stride: 1,
            padding: 0,
            has_bias: false,
        };
        let x = Tensor::<f64>::from_vec(Shape::new(1, 1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let g = Tensor::from_vec(Shape::new(1, 1, 2, 2), vec![0.5, -1.0, 2.0, 0.25]).unwrap();
        let w = Tensor::full(Shape::new(1, 1, 1, 1), 3.0);
        let grads = conv2d_backward(&g, &x, &w, &spec).unwrap();
        assert_eq!(grads.weights.data()[0], 0.5 - 2.0 + 6.0 + 1.0);
        assert_eq!(grads.input, g.scale(3.0));
    }

    #[test]
    fn backward_matches_finite_differences() {
        for stride in [1, 2] {
            let spec = ConvSpec::k3(3, 4, stride);
            let x: Tensor<f64> = lcg_tensor(Shape::new(2, 3, 8, 8), 7);
            let w: Tensor<f64> = lcg_tensor(spec.weight_shape(), 8);
            let b: Vec<f64> = lcg_tensor::<f64>(Shape::new(1, 4, 1, 1), 9).into_vec();
            let y = conv2d_forward(&x, &w, Some(&b), &spec).unwrap();
            let probe: Tensor<f64> = lcg_tensor(y.shape(), 10);
            let grads = conv2d_backward(&probe, &x, &w, &spec).unwrap();
            let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &[f64]| {
                let y = conv2d_forward(x, w, Some(b), &spec).unwrap();
                y.data().iter().zip(probe.data()).map(|(a, b)| a * b).sum::<f64>()
            };
            fd_check(&x, &grads.input, 1e-4, |t| loss(t, &w, &b));
            fd_check(&w, &grads.weights, 1e-4, |t| loss(&x, t, &b));
            let bt = Tensor::from_vec(Shape::new(1, 4, 1, 1), b.clone()).unwrap();
            let gb = Tensor::from_vec(bt.shape(), grads.bias.clone().unwrap()).unwrap();
            fd_check(&bt, &gb, 1e-4, |t| loss(&x, &w, t.data()));
        }
    }
}

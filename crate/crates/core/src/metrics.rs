//! Image similarity and edge metrics.
//!
//! PSNR is computed on float images with `max_val = 1.0` unless stated
//! otherwise, before any 8-bit quantization.

use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::ops::sobel;
use crate::real::Real;
use crate::tensor::{check_mask, Tensor};

/// Peak signal-to-noise ratio. Identical images have no finite PSNR and are
/// flagged rather than reported as infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr {
    Db(f64),
    Identical,
}

impl Psnr {
    pub fn db(self) -> Option<f64> {
        match self {
            Psnr::Db(v) => Some(v),
            Psnr::Identical => None,
        }
    }
}

impl PartialOrd for Psnr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Psnr::Identical, Psnr::Identical) => Some(Ordering::Equal),
            (Psnr::Identical, Psnr::Db(_)) => Some(Ordering::Greater),
            (Psnr::Db(_), Psnr::Identical) => Some(Ordering::Less),
            (Psnr::Db(a), Psnr::Db(b)) => a.partial_cmp(b),
        }
    }
}

impl core::fmt::Display for Psnr {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Psnr::Db(v) => write!(f, "{v:.4} dB"),
            Psnr::Identical => f.write_str("identical"),
        }
    }
}

fn same_shape<T: Real>(a: &Tensor<T>, b: &Tensor<T>, op: &'static str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op,
            expected: a.shape(),
            got: b.shape(),
        });
    }
    Ok(())
}

/// `10·log10(max_val² / MSE)`, accumulated in `f64`.
pub fn psnr<T: Real>(a: &Tensor<T>, b: &Tensor<T>, max_val: f64) -> Result<Psnr> {
    same_shape(a, b, "psnr")?;
    if !(max_val > 0.0) {
        return Err(Error::invalid("psnr", "max_val must be > 0"));
    }
    let sse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x.as_f64() - y.as_f64();
            d * d
        })
        .sum();
    if sse == 0.0 {
        return Ok(Psnr::Identical);
    }
    let mse = sse / a.len() as f64;
    Ok(Psnr::Db(10.0 * libm_log10(max_val * max_val / mse)))
}

#[inline]
fn libm_log10(x: f64) -> f64 {
    num_traits::Float::log10(x)
}

/// Mean of the finite values; `Identical` only when every entry is.
pub fn mean_psnr(values: impl IntoIterator<Item = Psnr>) -> Option<Psnr> {
    let (mut sum, mut finite, mut total) = (0.0, 0usize, 0usize);
    for v in values {
        total += 1;
        if let Psnr::Db(d) = v {
            sum += d;
            finite += 1;
        }
    }
    match (total, finite) {
        (0, _) => None,
        (_, 0) => Some(Psnr::Identical),
        _ => Some(Psnr::Db(sum / finite as f64)),
    }
}

/// Calls `f(n, c, i)` for every flat pixel index `i` of every channel where
/// the mask exceeds 0.5; returns how many pixels were selected.
fn for_masked<T: Real>(image: &Tensor<T>, mask: &Tensor<T>, op: &'static str, mut f: impl FnMut(usize, usize, usize)) -> Result<usize> {
    check_mask(image.shape(), mask.shape(), op)?;
    let s = image.shape();
    let half = T::of(0.5);
    let mut count = 0;
    for n in 0..s.n {
        let m = mask.plane(if mask.shape().n == 1 { 0 } else { n }, 0);
        for c in 0..s.c {
            for (i, &mv) in m.iter().enumerate() {
                if mv > half {
                    f(n, c, i);
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(count)
}

/// Mean Sobel magnitude `√(g_x² + g_y²)` over the masked pixels of every channel.
pub fn edge_sharpness<T: Real>(image: &Tensor<T>, mask: &Tensor<T>) -> Result<f64> {
    let g = sobel(image)?;
    let mut sum = 0.0;
    let count = for_masked(image, mask, "edge_sharpness", |n, c, i| {
        let gx = g.plane(n, 2 * c)[i].as_f64();
        let gy = g.plane(n, 2 * c + 1)[i].as_f64();
        sum += (gx * gx + gy * gy).sqrt();
    })?;
    Ok(sum / count as f64)
}

/// Mean `|a − b|` over the masked pixels of every channel.
pub fn region_error<T: Real>(a: &Tensor<T>, b: &Tensor<T>, mask: &Tensor<T>) -> Result<f64> {
    same_shape(a, b, "region_error")?;
    let mut sum = 0.0;
    let count = for_masked(a, mask, "region_error", |n, c, i| {
        sum += (a.plane(n, c)[i].as_f64() - b.plane(n, c)[i].as_f64()).abs();
    })?;
    Ok(sum / count as f64)
}

/// Mean squared difference of the Sobel responses of `a` and `b` over the
/// masked pixels (both response channels of every image channel).
pub fn masked_sobel_error<T: Real>(a: &Tensor<T>, b: &Tensor<T>, mask: &Tensor<T>) -> Result<f64> {
    same_shape(a, b, "masked_sobel_error")?;
    let (ga, gb) = (sobel(a)?, sobel(b)?);
    let mut sum = 0.0;
    let count = for_masked(a, mask, "masked_sobel_error", |n, c, i| {
        for k in [2 * c, 2 * c + 1] {
            let d = ga.plane(n, k)[i].as_f64() - gb.plane(n, k)[i].as_f64();
            sum += d * d;
        }
    })?;
    Ok(sum / (2 * count) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::testutil::lcg_tensor;
    use crate::tensor::Shape;

    fn unit(shape: Shape, seed: u64) -> Tensor<f32> {
        lcg_tensor::<f32>(shape, seed).map(|v| v * 0.4 + 0.5)
    }

    #[test]
    fn psnr_identical_and_closed_form() {
        let a = unit(Shape::new(1, 3, 8, 8), 1);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), Psnr::Identical);
        let a64 = a.cast::<f64>();
        let b64 = a64.map(|v| v + 1.0 / 255.0);
        let Psnr::Db(v) = psnr(&a64, &b64, 1.0).unwrap() else { panic!() };
        let want = 20.0 * 255f64.log10();
        assert!((v - want).abs() < 1e-9, "{v} vs {want}");
        assert!((want - 48.1308).abs() < 1e-4);
    }

    #[test]
    fn psnr_symmetric_and_matches_direct_mse() {
        let a = unit(Shape::new(1, 3, 8, 8), 2);
        let b = unit(Shape::new(1, 3, 8, 8), 3);
        let ab = psnr(&a, &b, 1.0).unwrap();
        assert_eq!(ab, psnr(&b, &a, 1.0).unwrap());
        let mse = a.data().iter().zip(b.data()).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum::<f64>() / a.len() as f64;
        assert!((ab.db().unwrap() - 10.0 * (1.0 / mse).log10()).abs() < 1e-9);
    }

    #[test]
    fn psnr_rejects_mismatch_and_bad_max() {
        let a = unit(Shape::new(1, 3, 8, 8), 2);
        let b = unit(Shape::new(1, 3, 8, 4), 3);
        assert!(psnr(&a, &b, 1.0).is_err());
        assert!(psnr(&a, &a, 0.0).is_err());
    }

    #[test]
    fn mean_psnr_ignores_identical_entries() {
        assert_eq!(mean_psnr([Psnr::Db(30.0), Psnr::Identical, Psnr::Db(40.0)]), Some(Psnr::Db(35.0)));
        assert_eq!(mean_psnr([Psnr::Identical]), Some(Psnr::Identical));
        assert_eq!(mean_psnr([]), None);
        assert!(Psnr::Identical > Psnr::Db(1e9));
    }

    #[test]
    fn edge_sharpness_cases() {
        let mask = Tensor::full(Shape::new(1, 1, 12, 12), 1.0f32);
        let flat = Tensor::full(Shape::new(1, 3, 12, 12), 0.4f32);
        assert_eq!(edge_sharpness(&flat, &mask).unwrap(), 0.0);
        let line = |x: usize| if x == 6 { 0.9f32 } else { 0.1 };
        let sharp = Tensor::from_fn(Shape::new(1, 3, 12, 12), |_, _, _, x| line(x));
        let blurred = Tensor::from_fn(sharp.shape(), |_, _, _, x| {
            (line(x.saturating_sub(1)) + line(x) + line((x + 1).min(11))) / 3.0
        });
        assert!(edge_sharpness(&sharp, &mask).unwrap() > edge_sharpness(&blurred, &mask).unwrap());
        let empty = Tensor::zeros(mask.shape());
        assert_eq!(edge_sharpness(&sharp, &empty), Err(Error::EmptyMask));
    }

    #[test]
    fn region_error_cases() {
        let a = unit(Shape::new(1, 3, 6, 6), 5);
        let mask = Tensor::from_fn(Shape::new(1, 1, 6, 6), |_, _, y, x| if (x + y) % 3 == 0 { 1.0f32 } else { 0.0 });
        assert_eq!(region_error(&a, &a, &mask).unwrap(), 0.0);
        let b = a.cast::<f64>().map(|v| v + 0.2);
        assert!((region_error(&a.cast::<f64>(), &b, &mask.cast()).unwrap() - 0.2).abs() < 1e-12);
        // loop oracle
        let c = unit(a.shape(), 6);
        let (mut sum, mut count) = (0.0, 0);
        for ch in 0..3 {
            for y in 0..6 {
                for x in 0..6 {
                    if mask.get(0, 0, y, x) > 0.5 {
                        sum += (a.get(0, ch, y, x) as f64 - c.get(0, ch, y, x) as f64).abs();
                        count += 1;
                    }
                }
            }
        }
        assert!((region_error(&a, &c, &mask).unwrap() - sum / count as f64).abs() < 1e-12);
    }
}

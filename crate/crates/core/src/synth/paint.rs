use alloc::vec::Vec;

use super::style::StyleSpec;
use crate::amplifier::MaskSet;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Blends `color` into `img` with per-pixel opacity `alpha`
/// (`px + a·(c − px)`, so `a = 0` leaves a pixel bit-identical).
fn blend(img: &mut Tensor, alpha: &[f64], color: &[f64; 3]) {
    for (c, &cv) in color.iter().enumerate() {
        let cv = cv as f32;
        for (px, &a) in img.plane_mut(0, c).iter_mut().zip(alpha) {
            if a != 0.0 {
                *px += a as f32 * (cv - *px);
            }
        }
    }
}

fn centroid(mask: &[f32], w: usize, keep: impl Fn(usize) -> bool) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut m) = (0.0, 0.0, 0.0);
    for (i, &v) in mask.iter().enumerate() {
        if v > 0.0 && keep(i % w) {
            let v = v as f64;
            sx += v * (i % w) as f64;
            sy += v * (i / w) as f64;
            m += v;
        }
    }
    (m > 0.0).then(|| (sx / m, sy / m))
}

/// Paints `style` onto a `1 × 3 × H × W` face using only its masks:
/// blush discs on the cheeks and an eyeshadow gradient above the eyes (both
/// restricted to the face mask), lip color over the lips mask, and an
/// eyeliner stroke along the upper edge of the eyes mask. Pixels where every
/// mask is 0 are returned unchanged.
pub fn paint_makeup(face: &Tensor, masks: &MaskSet, style: &StyleSpec) -> Result<Tensor> {
    let s = face.shape();
    if s.n != 1 || s.c != 3 || masks.face().shape() != s.with_channels(1) {
        return Err(Error::ShapeMismatch {
            op: "paint_makeup",
            expected: s.with_channels(1),
            got: masks.face().shape(),
        });
    }
    let (h, w) = (s.h, s.w);
    let size = h.min(w) as f64;
    let (m_face, m_lips, m_eyes) = (masks.face().data(), masks.lips().data(), masks.eyes().data());
    let mut img = face.clone();

    // blush
    if let Some((fcx, _)) = centroid(m_face, w, |_| true) {
        let lips_y = centroid(m_lips, w, |_| true).map(|c| c.1);
        let r = style.blush_radius * size;
        let mut alpha = alloc::vec![0.0; h * w];
        for left in [true, false] {
            let Some((ex, ey)) = centroid(m_eyes, w, |x| ((x as f64) < fcx) == left) else { continue };
            let ly = lips_y.unwrap_or(ey + 0.25 * size);
            let (cx, cy) = (ex + (ex - fcx) * 0.25, ey + 0.55 * (ly - ey));
            if r <= 0.0 {
                continue;
            }
            for (i, a) in alpha.iter_mut().enumerate() {
                let (dx, dy) = ((i % w) as f64 - cx, (i / w) as f64 - cy);
                let t = (dx * dx + dy * dy) / (r * r);
                if t < 1.0 {
                    *a += style.blush_alpha * (1.0 - t) * (1.0 - t);
                }
            }
        }
        for (a, &m) in alpha.iter_mut().zip(m_face) {
            *a = a.min(1.0) * m as f64;
        }
        blend(&mut img, &alpha, &style.blush_color);
    }

    // eyeshadow
    let extent = style.eyeshadow_extent * size;
    if extent > 0.0 {
        let column: Vec<(Option<usize>, usize)> = (0..w)
            .map(|x| {
                let rows = (0..h).filter(|&y| m_eyes[y * w + x] > 0.5);
                let top = rows.clone().next();
                (top, rows.count())
            })
            .collect();
        let tallest = column.iter().map(|c| c.1).max().unwrap_or(0).max(1) as f64;
        let mut alpha = alloc::vec![0.0; h * w];
        for (x, &(top, count)) in column.iter().enumerate() {
            let Some(top) = top else { continue };
            let taper = (2.0 * count as f64 / tallest).min(1.0);
            for y in 0..top {
                let t = (top - y) as f64 / extent;
                if t < 1.0 {
                    let i = y * w + x;
                    alpha[i] = style.eyeshadow_alpha * (1.0 - t) * taper * m_face[i] as f64;
                }
            }
        }
        blend(&mut img, &alpha, &style.eyeshadow_color);
    }

    // lips
    let alpha: Vec<f64> = m_lips.iter().map(|&m| style.lip_alpha * m as f64).collect();
    blend(&mut img, &alpha, &style.lip_color);

    // eyeliner: the part of the eyes mask whose pixel `t` rows above lies outside it
    let t = style.eyeliner_thickness as usize;
    let alpha: Vec<f64> = (0..h * w)
        .map(|i| {
            let above = if i / w >= t { m_eyes[i - t * w] } else { 0.0 };
            style.eyeliner_alpha * (m_eyes[i] - above).clamp(0.0, 1.0) as f64
        })
        .collect();
    blend(&mut img, &alpha, &style.eyeliner_color);

    Ok(img)
}

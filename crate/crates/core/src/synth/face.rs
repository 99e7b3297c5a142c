use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::amplifier::MaskSet;
use crate::error::{Error, Result};
use crate::net::weights::unit_f64;
use crate::net::SIZE_DIVISOR;
use crate::tensor::{Shape, Tensor};

/// Rotated ellipse in normalized image coordinates (`[0, 1]` across the image).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    /// Radians, clockwise in image coordinates.
    pub angle: f64,
}

impl Ellipse {
    /// `< 1` inside, `1` on the boundary.
    fn level(&self, x: f64, y: f64, grow: f64) -> f64 {
        let (s, c) = self.angle.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = (dx * c + dy * s) / (self.rx + grow);
        let v = (-dx * s + dy * c) / (self.ry + grow);
        u * u + v * v
    }

    fn boundary_point(&self, t: f64) -> (f64, f64) {
        let (s, c) = self.angle.sin_cos();
        let (u, v) = (self.rx * t.cos(), self.ry * t.sin());
        (self.cx + u * c - v * s, self.cy + u * s + v * c)
    }

    fn contains_ellipse(&self, inner: &Ellipse) -> bool {
        (0..64).all(|i| {
            let (x, y) = inner.boundary_point(i as f64 * core::f64::consts::TAU / 64.0);
            self.level(x, y, 0.0) < 1.0
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceParams {
    pub face: Ellipse,
    pub eyes: [Ellipse; 2],
    pub lips: Ellipse,
    pub skin: [f64; 3],
    pub background: [f64; 3],
    pub texture_amplitude: f64,
    pub texture_seed: u64,
}

const SCLERA: [f64; 3] = [0.93, 0.92, 0.90];
const PUPIL: [f64; 3] = [0.12, 0.09, 0.08];
const SUPERSAMPLE: usize = 4;

impl FaceParams {
    pub fn validate(&self) -> Result<()> {
        let all = [&self.face, &self.eyes[0], &self.eyes[1], &self.lips];
        if !all.iter().all(|e| e.rx > 0.0 && e.ry > 0.0 && e.rx.is_finite() && e.ry.is_finite()) {
            return Err(Error::invalid("face_params", "ellipse axes must be positive"));
        }
        for (name, e) in [("left eye", &self.eyes[0]), ("right eye", &self.eyes[1]), ("lips", &self.lips)] {
            if !self.face.contains_ellipse(e) {
                return Err(Error::invalid("face_params", alloc::format!("{name} is not inside the face")));
            }
        }
        let unit = |c: &[f64; 3]| c.iter().all(|v| (0.0..=1.0).contains(v));
        if !unit(&self.skin) || !unit(&self.background) || !(self.texture_amplitude >= 0.0) {
            return Err(Error::invalid("face_params", "colors must lie in [0, 1], texture amplitude >= 0"));
        }
        Ok(())
    }

    /// A plausible frontal face with jittered geometry and tones.
    pub fn random(rng: &mut impl RngCore) -> Self {
        let mut u = |lo: f64, hi: f64| lo + (hi - lo) * unit_f64(rng);
        let angle = u(-0.12, 0.12);
        let face = Ellipse {
            cx: u(0.47, 0.53),
            cy: u(0.49, 0.54),
            rx: u(0.30, 0.35),
            ry: u(0.38, 0.43),
            angle,
        };
        let (s, c) = angle.sin_cos();
        let place = |fx: f64, fy: f64| (face.cx + fx * c - fy * s, face.cy + fx * s + fy * c);
        let eye_dx = u(0.36, 0.44) * face.rx;
        let eye_dy = -u(0.12, 0.22) * face.ry;
        let eye_rx = u(0.17, 0.21) * face.rx;
        let eye_ry = eye_rx * u(0.42, 0.55);
        let eye = |side: f64| {
            let (cx, cy) = place(side * eye_dx, eye_dy);
            Ellipse { cx, cy, rx: eye_rx, ry: eye_ry, angle }
        };
        let (lx, ly) = place(u(-0.03, 0.03) * face.rx, u(0.45, 0.55) * face.ry);
        let lips_rx = u(0.30, 0.38) * face.rx;
        let lips = Ellipse {
            cx: lx,
            cy: ly,
            rx: lips_rx,
            ry: lips_rx * u(0.32, 0.45),
            angle,
        };
        let r = u(0.60, 0.90);
        let skin = [r, r * u(0.72, 0.84), r * u(0.58, 0.72)];
        let background = [u(0.1, 0.9), u(0.1, 0.9), u(0.1, 0.9)];
        FaceParams {
            face,
            eyes: [eye(-1.0), eye(1.0)],
            lips,
            skin,
            background,
            texture_amplitude: u(0.02, 0.05),
            texture_seed: rng.next_u64(),
        }
    }

    fn lip_color(&self) -> [f64; 3] {
        [
            self.skin[0] * 0.85 + 0.08,
            self.skin[1] * 0.62,
            self.skin[2] * 0.65,
        ]
    }
}

/// Fraction of the `SUPERSAMPLE²` subsamples of every pixel inside `e`
/// (axes grown by `grow`, normalized units).
fn coverage(e: &Ellipse, size: usize, grow: f64) -> Vec<f64> {
    let inv = 1.0 / size as f64;
    let k = SUPERSAMPLE as f64;
    let mut out = alloc::vec![0.0; size * size];
    // bounding box of the grown ellipse
    let reach = e.rx.max(e.ry) + grow + 2.0 * inv;
    let lo = |c: f64| (((c - reach) * size as f64).floor().max(0.0)) as usize;
    let hi = |c: f64| (((c + reach) * size as f64).ceil().max(0.0) as usize).min(size);
    for y in lo(e.cy)..hi(e.cy) {
        for x in lo(e.cx)..hi(e.cx) {
            let mut hits = 0;
            for sy in 0..SUPERSAMPLE {
                for sx in 0..SUPERSAMPLE {
                    let px = (x as f64 + (sx as f64 + 0.5) / k) * inv;
                    let py = (y as f64 + (sy as f64 + 0.5) / k) * inv;
                    if e.level(px, py, grow) <= 1.0 {
                        hits += 1;
                    }
                }
            }
            out[y * size + x] = hits as f64 / (k * k);
        }
    }
    out
}

/// Two octaves of bilinearly interpolated lattice noise in `[-1, 1]`.
fn value_noise(size: usize, seed: u64) -> Vec<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut out = alloc::vec![0.0; size * size];
    let base = (size / 32).max(2);
    for (cell, weight) in [(base, 0.65), ((base / 2).max(1), 0.35)] {
        let g = size / cell + 2;
        let lattice: Vec<f64> = (0..g * g).map(|_| unit_f64(&mut rng) * 2.0 - 1.0).collect();
        for y in 0..size {
            let (fy, ty) = (y / cell, (y % cell) as f64 / cell as f64);
            for x in 0..size {
                let (fx, tx) = (x / cell, (x % cell) as f64 / cell as f64);
                let at = |j: usize, i: usize| lattice[j * g + i];
                let top = at(fy, fx) + tx * (at(fy, fx + 1) - at(fy, fx));
                let bot = at(fy + 1, fx) + tx * (at(fy + 1, fx + 1) - at(fy + 1, fx));
                out[y * size + x] += weight * (top + ty * (bot - top));
            }
        }
    }
    out
}

/// Mask dilation in pixels at a given image size.
pub fn mask_dilation_px(size: usize) -> f64 {
    (size as f64 / 64.0).max(1.0)
}

/// Rasterizes a face into a `1 × 3 × size × size` image with its masks.
///
/// The skin carries value-noise texture; eyes are a sclera with a pupil;
/// `face` covers the skin outside the eye and lip interiors, `eyes` and
/// `lips` are the corresponding ellipses grown by [`mask_dilation_px`].
pub fn gen_face(params: &FaceParams, size: usize, seed: u64) -> Result<(Tensor, MaskSet)> {
    params.validate()?;
    if size == 0 || size % SIZE_DIVISOR != 0 {
        return Err(Error::IndivisibleDims {
            op: "gen_face",
            h: size,
            w: size,
            divisor: SIZE_DIVISOR,
        });
    }
    let grow = mask_dilation_px(size) / size as f64;
    let face = coverage(&params.face, size, 0.0);
    let eyes: Vec<Vec<f64>> = params.eyes.iter().map(|e| coverage(e, size, 0.0)).collect();
    let eyes_grown: Vec<Vec<f64>> = params.eyes.iter().map(|e| coverage(e, size, grow)).collect();
    let pupils: Vec<Vec<f64>> = params
        .eyes
        .iter()
        .map(|e| {
            let r = e.ry * 0.75;
            coverage(&Ellipse { rx: r, ry: r, ..*e }, size, 0.0)
        })
        .collect();
    let lips = coverage(&params.lips, size, 0.0);
    let lips_grown = coverage(&params.lips, size, grow);
    let noise = value_noise(size, seed ^ params.texture_seed);
    let lip_color = params.lip_color();

    let shape = Shape::new(1, 3, size, size);
    let mut img = Tensor::zeros(shape);
    for c in 0..3 {
        let plane = img.plane_mut(0, c);
        for i in 0..size * size {
            let skin = (params.skin[c] + params.texture_amplitude * noise[i]).clamp(0.0, 1.0);
            let mut v = params.background[c];
            v += face[i] * (skin - v);
            for e in 0..2 {
                v += eyes[e][i] * (SCLERA[c] - v);
                v += pupils[e][i] * (PUPIL[c] - v);
            }
            v += lips[i] * (lip_color[c] - v);
            plane[i] = v as f32;
        }
    }
    let m = |f: &dyn Fn(usize) -> f64| {
        Tensor::from_vec(Shape::new(1, 1, size, size), (0..size * size).map(|i| f(i).clamp(0.0, 1.0) as f32).collect())
    };
    let m_face = m(&|i| face[i] * (1.0 - eyes[0][i]) * (1.0 - eyes[1][i]) * (1.0 - lips[i]))?;
    let m_eyes = m(&|i| eyes_grown[0][i] + eyes_grown[1][i])?;
    let m_lips = m(&|i| lips_grown[i])?;
    Ok((img, MaskSet::new(m_face, m_lips, m_eyes)?))
}

/// Derives the seed of entity `index` from a run seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Face parameters for `face_seed`.
pub fn face_params_for_seed(face_seed: u64) -> FaceParams {
    FaceParams::random(&mut Xoshiro256PlusPlus::seed_from_u64(face_seed))
}

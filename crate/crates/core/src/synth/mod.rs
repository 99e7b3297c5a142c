//! Procedural faces with exact masks and a mask-driven makeup painter that
//! serves as the ground-truth oracle.

pub mod face;
pub mod paint;
pub mod style;

use alloc::string::String;
use alloc::vec::Vec;

pub use face::{derive_seed, face_params_for_seed, gen_face, mask_dilation_px, Ellipse, FaceParams};
pub use paint::paint_makeup;
pub use style::{builtin_styles, find_style, StyleSpec};

use crate::amplifier::MaskSet;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A bare face with its masks.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedFace {
    pub face_seed: u64,
    pub image: Tensor,
    pub masks: MaskSet,
}

/// An input/target pair sharing one set of masks.
#[derive(Clone, Debug, PartialEq)]
pub struct Pair {
    pub id: String,
    pub face_seed: u64,
    pub style_id: u32,
    pub input: Tensor,
    pub target: Tensor,
    pub masks: MaskSet,
}

pub fn pair_id(face_seed: u64, style_id: u32) -> String {
    alloc::format!("pair_{face_seed}_{style_id}")
}

/// `n` faces whose per-face seeds are derived from `seed`.
pub fn seed_faces(n: usize, size: usize, seed: u64) -> Result<Vec<SeedFace>> {
    if n == 0 {
        return Err(Error::invalid("seed_faces", "need at least one face"));
    }
    (0..n as u64)
        .map(|i| {
            let face_seed = derive_seed(seed, i);
            let (image, masks) = gen_face(&face_params_for_seed(face_seed), size, face_seed)?;
            Ok(SeedFace { face_seed, image, masks })
        })
        .collect()
}

/// Every face painted with every style, face-major.
pub fn generate_pairs(n_faces: usize, styles: &[StyleSpec], size: usize, seed: u64) -> Result<Vec<Pair>> {
    if styles.is_empty() {
        return Err(Error::invalid("generate_pairs", "no styles"));
    }
    for s in styles {
        s.validate()?;
    }
    let mut out = Vec::with_capacity(n_faces * styles.len());
    for face in seed_faces(n_faces, size, seed)? {
        for style in styles {
            out.push(Pair {
                id: pair_id(face.face_seed, style.style_id),
                face_seed: face.face_seed,
                style_id: style.style_id,
                input: face.image.clone(),
                target: paint_makeup(&face.image, &face.masks, style)?,
                masks: face.masks.clone(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_by_five_gives_25_unique_pairs() {
        let p = generate_pairs(5, &builtin_styles(), 32, 1).unwrap();
        assert_eq!(p.len(), 25);
        let mut ids: Vec<&str> = p.iter().map(|x| x.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 25);
        assert!(p.iter().all(|x| x.input.shape().h == 32 && x.target.shape().w == 32));
    }

    #[test]
    fn deterministic_and_rejects_empty() {
        let s = builtin_styles();
        assert_eq!(generate_pairs(2, &s[..1], 32, 4).unwrap(), generate_pairs(2, &s[..1], 32, 4).unwrap());
        assert!(generate_pairs(2, &[], 32, 4).is_err());
        assert!(generate_pairs(0, &s, 32, 4).is_err());
    }
}

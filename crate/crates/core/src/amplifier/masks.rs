use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Face, lips and eyes masks: single-channel, equal dims, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskSet<T: Real = f32> {
    face: Tensor<T>,
    lips: Tensor<T>,
    eyes: Tensor<T>,
}

fn check_unit<T: Real>(m: &Tensor<T>, name: &str) -> Result<()> {
    if m.shape().c != 1 {
        return Err(Error::invalid("mask_set", alloc::format!("{name} mask must have one channel, has {}", m.shape().c)));
    }
    if !m.data().iter().all(|&v| v >= T::zero() && v <= T::one()) {
        return Err(Error::invalid("mask_set", alloc::format!("{name} mask has values outside [0, 1]")));
    }
    Ok(())
}

impl<T: Real> MaskSet<T> {
    pub fn new(face: Tensor<T>, lips: Tensor<T>, eyes: Tensor<T>) -> Result<Self> {
        check_unit(&face, "face")?;
        check_unit(&lips, "lips")?;
        check_unit(&eyes, "eyes")?;
        for m in [&lips, &eyes] {
            if m.shape() != face.shape() {
                return Err(Error::ShapeMismatch {
                    op: "mask_set",
                    expected: face.shape(),
                    got: m.shape(),
                });
            }
        }
        Ok(MaskSet { face, lips, eyes })
    }

    pub fn face(&self) -> &Tensor<T> {
        &self.face
    }

    pub fn lips(&self) -> &Tensor<T> {
        &self.lips
    }

    pub fn eyes(&self) -> &Tensor<T> {
        &self.eyes
    }

    pub fn height(&self) -> usize {
        self.face.shape().h
    }

    pub fn width(&self) -> usize {
        self.face.shape().w
    }

    pub fn cast<U: Real>(&self) -> MaskSet<U> {
        MaskSet {
            face: self.face.cast(),
            lips: self.lips.cast(),
            eyes: self.eyes.cast(),
        }
    }

    pub fn into_parts(self) -> (Tensor<T>, Tensor<T>, Tensor<T>) {
        (self.face, self.lips, self.eyes)
    }
}

/// Region any makeup may touch: `clamp(face + lips + eyes, 0, 1)`.
pub fn changed_mask<T: Real>(masks: &MaskSet<T>) -> Tensor<T> {
    let mut out = masks.face.clone();
    for ((o, &l), &e) in out.data_mut().iter_mut().zip(masks.lips.data()).zip(masks.eyes.data()) {
        *o = (*o + l + e).min(T::one());
    }
    out
}

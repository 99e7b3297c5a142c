//! Frozen feature extractors for the perceptual loss.

use alloc::vec::Vec;

use rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::net::IMAGE_CHANNELS;
use crate::net::weights::unit_f64;
use crate::ops::{conv2d_backward, conv2d_forward, relu_backward, relu_forward, ConvSpec};
use crate::real::Real;
use crate::tensor::Tensor;

/// A fixed differentiable map from images to features. Implementations never
/// update their own parameters.
pub trait FeatureExtractor<T: Real> {
    type Trace;

    fn extract(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Self::Trace)>;

    /// Gradient with respect to the extractor input, given the gradient with
    /// respect to the features produced alongside `trace`.
    fn backward(&self, trace: &Self::Trace, grad: &Tensor<T>) -> Result<Tensor<T>>;

    fn features(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.extract(x)?.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStage<T: Real> {
    pub conv: ConvSpec,
    pub weight: Tensor<T>,
    pub bias: Vec<T>,
    pub relu: bool,
}

/// A stack of conv (+ReLU) stages with frozen weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvFeatureExtractor<T: Real = f32> {
    stages: Vec<FeatureStage<T>>,
}

/// Per stage: the stage input and, when the stage has a ReLU, its input.
#[derive(Clone, Debug)]
pub struct ConvTrace<T: Real> {
    saved: Vec<(Tensor<T>, Option<Tensor<T>>)>,
}

/// Channel widths of the default three stages.
pub const EXTRACTOR_WIDTHS: [usize; 3] = [8, 16, 32];

impl ConvFeatureExtractor<f32> {
    /// Three 3×3 stride-2 stages with He-uniform weights drawn from `seed`.
    /// Stages one and two end in a ReLU; the last stage is tapped before its
    /// activation.
    pub fn seeded(seed: u64) -> Self {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut stages = Vec::with_capacity(EXTRACTOR_WIDTHS.len());
        let mut in_c = IMAGE_CHANNELS;
        for (i, &out_c) in EXTRACTOR_WIDTHS.iter().enumerate() {
            let conv = ConvSpec::k3(in_c, out_c, 2);
            let bound = (6.0 / (in_c * 9) as f64).sqrt();
            let weight = Tensor::from_fn(conv.weight_shape(), |_, _, _, _| {
                ((unit_f64(&mut rng) * 2.0 - 1.0) * bound) as f32
            });
            stages.push(FeatureStage {
                conv,
                weight,
                bias: alloc::vec![0.0; out_c],
                relu: i + 1 < EXTRACTOR_WIDTHS.len(),
            });
            in_c = out_c;
        }
        ConvFeatureExtractor { stages }
    }
}

impl<T: Real> ConvFeatureExtractor<T> {
    pub fn from_stages(stages: Vec<FeatureStage<T>>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::invalid("feature_extractor", "no stages"));
        }
        for (i, s) in stages.iter().enumerate() {
            s.conv.validate()?;
            if s.weight.shape() != s.conv.weight_shape() || s.bias.len() != s.conv.out_channels || !s.conv.has_bias {
                return Err(Error::invalid("feature_extractor", alloc::format!("stage {i} parameters do not match its conv")));
            }
            if i > 0 && stages[i - 1].conv.out_channels != s.conv.in_channels {
                return Err(Error::invalid("feature_extractor", alloc::format!("stage {i} input width mismatch")));
            }
        }
        Ok(ConvFeatureExtractor { stages })
    }

    pub fn stages(&self) -> &[FeatureStage<T>] {
        &self.stages
    }

    pub fn cast<U: Real>(&self) -> ConvFeatureExtractor<U> {
        ConvFeatureExtractor {
            stages: self
                .stages
                .iter()
                .map(|s| FeatureStage {
                    conv: s.conv,
                    weight: s.weight.cast(),
                    bias: s.bias.iter().map(|&b| U::of(b.as_f64())).collect(),
                    relu: s.relu,
                })
                .collect(),
        }
    }
}

impl<T: Real> FeatureExtractor<T> for ConvFeatureExtractor<T> {
    type Trace = ConvTrace<T>;

    fn extract(&self, x: &Tensor<T>) -> Result<(Tensor<T>, ConvTrace<T>)> {
        let mut saved = Vec::with_capacity(self.stages.len());
        let mut h = x.clone();
        for s in &self.stages {
            let pre = conv2d_forward(&h, &s.weight, Some(&s.bias), &s.conv)?;
            let input = core::mem::replace(&mut h, if s.relu { relu_forward(&pre) } else { pre.clone() });
            saved.push((input, s.relu.then_some(pre)));
        }
        Ok((h, ConvTrace { saved }))
    }

    fn features(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut h = x.clone();
        for s in &self.stages {
            h = conv2d_forward(&h, &s.weight, Some(&s.bias), &s.conv)?;
            if s.relu {
                h = relu_forward(&h);
            }
        }
        Ok(h)
    }

    fn backward(&self, trace: &ConvTrace<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = grad.clone();
        for (s, (input, pre)) in self.stages.iter().zip(&trace.saved).rev() {
            if let Some(pre) = pre {
                g = relu_backward(&g, pre)?;
            }
            g = conv2d_backward(&g, input, &s.weight, &s.conv)?.input;
        }
        Ok(g)
    }
}

use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::{total_loss, LossBreakdown, LossWeights};
use super::perceptual::{ConvFeatureExtractor, FeatureExtractor};
use crate::amplifier::MaskSet;
use crate::error::{Error, Result};
use crate::metrics::{mean_psnr, psnr, Psnr};
use crate::net::{apply_residual, forward, forward_with_grads, init_weights, NetworkConfig, NetworkWeights, IMAGE_CHANNELS, SIZE_DIVISOR};
use crate::tensor::Tensor;

/// Mixed into the run seed to seed the frozen perceptual extractor.
pub const EXTRACTOR_SEED_SALT: u64 = 0x7065_7263_6570_7431;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            epochs: 30,
            batch_size: 1,
            seed: 0,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        if self.batch_size == 0 {
            return Err(Error::invalid("train_config", "batch_size must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::invalid("train_config", "validation_fraction must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// One training pair: the bare face, the made-up target and the region masks.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: Tensor,
    pub target: Tensor,
    pub masks: MaskSet,
}

impl Sample {
    pub fn new(input: Tensor, target: Tensor, masks: MaskSet) -> Result<Self> {
        let s = input.shape();
        if s.n != 1 || s.c != IMAGE_CHANNELS {
            return Err(Error::invalid("sample", alloc::format!("input must be 1×3×H×W, got {s}")));
        }
        if target.shape() != s {
            return Err(Error::ShapeMismatch {
                op: "sample",
                expected: s,
                got: target.shape(),
            });
        }
        if masks.face().shape() != s.with_channels(1) {
            return Err(Error::ShapeMismatch {
                op: "sample",
                expected: s.with_channels(1),
                got: masks.face().shape(),
            });
        }
        Ok(Sample { input, target, masks })
    }
}

/// Epoch 0 is the evaluation at initialization; later entries hold the mean
/// per-sample training loss of that epoch and the validation PSNR after it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub val_psnr: Psnr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Epoch whose weights were returned.
    pub best_epoch: usize,
    pub train_indices: Vec<usize>,
    /// Empty when the dataset was too small to hold out anything; validation
    /// then runs on the training pairs.
    pub val_indices: Vec<usize>,
}

impl TrainHistory {
    pub fn best(&self) -> &EpochRecord {
        &self.records[self.best_epoch]
    }

    pub fn last(&self) -> &EpochRecord {
        self.records.last().expect("history holds the initial record")
    }

    /// Indices the validation PSNR was computed on.
    pub fn eval_indices(&self) -> &[usize] {
        if self.val_indices.is_empty() {
            &self.train_indices
        } else {
            &self.val_indices
        }
    }
}

fn shuffle(v: &mut [usize], rng: &mut Xoshiro256PlusPlus) {
    for i in (1..v.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        v.swap(i, j);
    }
}

fn check_dataset(dataset: &[Sample]) -> Result<()> {
    let first = dataset.first().ok_or(Error::EmptyDataset)?.input.shape();
    if first.h % SIZE_DIVISOR != 0 || first.w % SIZE_DIVISOR != 0 {
        return Err(Error::IndivisibleDims {
            op: "train",
            h: first.h,
            w: first.w,
            divisor: SIZE_DIVISOR,
        });
    }
    for s in dataset {
        if s.input.shape() != first {
            return Err(Error::ShapeMismatch {
                op: "train",
                expected: first,
                got: s.input.shape(),
            });
        }
    }
    Ok(())
}

/// Mean validation PSNR of `apply_residual(input, forward(input))` against the targets.
pub fn validation_psnr(weights: &NetworkWeights, dataset: &[Sample], indices: &[usize]) -> Result<Psnr> {
    let mut values = Vec::with_capacity(indices.len());
    for &i in indices {
        let s = &dataset[i];
        let pred = apply_residual(&s.input, &forward(weights, &s.input)?, 1.0)?;
        values.push(psnr(&pred, &s.target, 1.0)?);
    }
    mean_psnr(values).ok_or(Error::EmptyDataset)
}

/// Trains with the default seeded perceptual extractor.
pub fn train(
    dataset: &[Sample],
    net_config: &NetworkConfig,
    config: &TrainConfig,
    loss_weights: &LossWeights,
) -> Result<(NetworkWeights, TrainHistory)> {
    let extractor = ConvFeatureExtractor::seeded(config.seed ^ EXTRACTOR_SEED_SALT);
    train_with(dataset, net_config, config, loss_weights, &extractor, |_| {})
}

/// Full training loop. `on_epoch` sees every history record as it is produced.
pub fn train_with<E: FeatureExtractor<f32>>(
    dataset: &[Sample],
    net_config: &NetworkConfig,
    config: &TrainConfig,
    loss_weights: &LossWeights,
    extractor: &E,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(NetworkWeights, TrainHistory)> {
    config.validate()?;
    loss_weights.validate()?;
    check_dataset(dataset)?;

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    shuffle(&mut order, &mut rng);
    let n_val = ((n as f64 * config.validation_fraction) as usize).min(n - 1);
    let mut val_indices = order.split_off(n - n_val);
    let mut train_indices = order;
    train_indices.sort_unstable();
    val_indices.sort_unstable();
    let eval_indices = if val_indices.is_empty() { train_indices.clone() } else { val_indices.clone() };

    let mut weights = init_weights(net_config, config.seed);
    let adam = config.adam();
    let mut state = AdamState::new(weights.params().iter().map(|p| &p.value));

    let mut initial = LossBreakdown::default();
    for &i in &train_indices {
        let s = &dataset[i];
        let pred = s.input.add(&forward(&weights, &s.input)?)?;
        let (b, _) = total_loss(&s.target, &pred, s.masks.eyes(), loss_weights, extractor, None)?;
        initial.accumulate(&b, 1.0 / train_indices.len() as f64);
    }
    let first = EpochRecord {
        epoch: 0,
        loss: initial,
        val_psnr: validation_psnr(&weights, dataset, &eval_indices)?,
    };
    on_epoch(&first);
    let mut records = alloc::vec![first];
    let mut best = (0, first.val_psnr, weights.clone());

    let mut epoch_order = train_indices.clone();
    for epoch in 1..=config.epochs {
        shuffle(&mut epoch_order, &mut rng);
        let mut epoch_loss = LossBreakdown::default();
        for batch in epoch_order.chunks(config.batch_size) {
            let mut grads: Vec<Tensor> = weights.params().iter().map(|p| Tensor::zeros(p.value.shape())).collect();
            for &i in batch {
                let s = &dataset[i];
                let (residual, trace) = forward_with_grads(&weights, &s.input)?;
                let pred = s.input.add(&residual)?;
                let (b, g_pred) = total_loss(&s.target, &pred, s.masks.eyes(), loss_weights, extractor, None)?;
                if !b.is_finite() {
                    return Err(Error::invalid("train", alloc::format!("non-finite loss at epoch {epoch}")));
                }
                epoch_loss.accumulate(&b, 1.0 / train_indices.len() as f64);
                let g = trace.backward(&weights, &g_pred)?;
                for (acc, gi) in grads.iter_mut().zip(&g.params) {
                    acc.add_scaled(gi, 1.0)?;
                }
            }
            let k = 1.0 / batch.len() as f32;
            for g in &mut grads {
                *g = g.scale(k);
            }
            adam_step(weights.params_mut().iter_mut().map(|p| &mut p.value), &grads, &mut state, &adam)?;
        }
        let record = EpochRecord {
            epoch,
            loss: epoch_loss,
            val_psnr: validation_psnr(&weights, dataset, &eval_indices)?,
        };
        on_epoch(&record);
        if record.val_psnr > best.1 {
            best = (epoch, record.val_psnr, weights.clone());
        }
        records.push(record);
    }

    let history = TrainHistory {
        records,
        best_epoch: best.0,
        train_indices,
        val_indices,
    };
    Ok((best.2, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    fn face_like(seed: u64) -> Sample {
        let s = Shape::new(1, 3, 8, 8);
        let input = Tensor::from_fn(s, |_, c, y, x| {
            let v = ((seed as usize * 7 + c * 3 + y * 5 + x * 11) % 17) as f32 / 17.0;
            0.2 + 0.6 * v
        });
        let m = Tensor::from_fn(s.with_channels(1), |_, _, y, x| if (2..6).contains(&y) && (2..6).contains(&x) { 1.0 } else { 0.0 });
        let masks = MaskSet::new(m.clone(), m.clone(), m).unwrap();
        let target = Tensor::from_fn(s, |_, c, y, x| {
            let base = input.get(0, c, y, x);
            if (2..6).contains(&y) && (2..6).contains(&x) && c == 0 { base + 0.2 } else { base }
        });
        Sample::new(input, target, masks).unwrap()
    }

    fn tiny() -> NetworkConfig {
        NetworkConfig::new(4, 4, 4)
    }

    #[test]
    fn identity_task_stays_at_zero_loss() {
        let mut s = face_like(1);
        s.target = s.input.clone();
        let cfg = TrainConfig { epochs: 20, ..TrainConfig::default() };
        let (w, h) = train(&[s.clone()], &tiny(), &cfg, &LossWeights::default()).unwrap();
        assert_eq!(h.records.len(), 21);
        assert!(h.val_indices.is_empty());
        let l0 = h.records[0].loss.total;
        assert!(l0 < 1e-12);
        for r in &h.records {
            assert!(r.loss.total <= l0 + 1e-6);
        }
        assert!(h.last().loss.total < 1e-4);
        assert_eq!(h.records[0].val_psnr, Psnr::Identical);
        assert_eq!(apply_residual(&s.input, &forward(&w, &s.input).unwrap(), 1.0).unwrap(), s.input);
    }

    #[test]
    fn learning_reduces_loss_and_keeps_best_weights() {
        let data: Vec<Sample> = (0..5).map(face_like).collect();
        let cfg = TrainConfig { epochs: 6, learning_rate: 2e-3, validation_fraction: 0.2, seed: 3, ..TrainConfig::default() };
        let (w, h) = train(&data, &tiny(), &cfg, &LossWeights::default()).unwrap();
        assert_eq!(h.val_indices.len(), 1);
        assert_eq!(h.train_indices.len(), 4);
        assert!(h.last().loss.total < h.records[0].loss.total);
        assert!(h.best().val_psnr >= h.records[0].val_psnr);
        assert_eq!(validation_psnr(&w, &data, h.eval_indices()).unwrap(), h.best().val_psnr);
        for (i, r) in h.records.iter().enumerate() {
            assert_eq!(r.epoch, i);
            assert!(r.loss.is_finite());
        }
    }

    #[test]
    fn same_seed_same_history() {
        let data: Vec<Sample> = (0..4).map(face_like).collect();
        let cfg = TrainConfig { epochs: 3, batch_size: 2, seed: 9, validation_fraction: 0.25, ..TrainConfig::default() };
        let a = train(&data, &tiny(), &cfg, &LossWeights::default()).unwrap();
        let b = train(&data, &tiny(), &cfg, &LossWeights::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_empty_and_bad_dims() {
        let cfg = TrainConfig::default();
        assert_eq!(train(&[], &tiny(), &cfg, &LossWeights::default()).unwrap_err(), Error::EmptyDataset);
        let s = Shape::new(1, 3, 6, 6);
        let m = Tensor::zeros(s.with_channels(1));
        let odd = Sample::new(Tensor::zeros(s), Tensor::zeros(s), MaskSet::new(m.clone(), m.clone(), m).unwrap()).unwrap();
        assert!(matches!(train(&[odd], &tiny(), &cfg, &LossWeights::default()), Err(Error::IndivisibleDims { .. })));
        let bad = TrainConfig { learning_rate: 0.0, ..cfg };
        assert!(train(&[face_like(0)], &tiny(), &bad, &LossWeights::default()).is_err());
    }
}

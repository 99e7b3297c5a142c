//! Loss stack, Adam optimizer and the training loop.

pub mod adam;
pub mod loss;
pub mod perceptual;
pub mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{loss_eyeliner, loss_perceptual, loss_rec, total_loss, LossBreakdown, LossWeights};
pub use perceptual::{ConvFeatureExtractor, ConvTrace, FeatureExtractor, FeatureStage, EXTRACTOR_WIDTHS};
pub use trainer::{train, train_with, validation_psnr, EpochRecord, Sample, TrainConfig, TrainHistory, EXTRACTOR_SEED_SALT};

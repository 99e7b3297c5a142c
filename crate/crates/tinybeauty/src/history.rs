//! JSON record of a training run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tinybeauty_core::metrics::Psnr;
use tinybeauty_core::train::TrainHistory;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochDoc {
    pub epoch: usize,
    pub total: f64,
    pub rec: f64,
    pub eyeliner: f64,
    pub perceptual: f64,
    pub adversarial: f64,
    /// `None` when every validation pair was reproduced exactly.
    pub val_psnr_db: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryDoc {
    pub seed: u64,
    pub best_epoch: usize,
    pub train_ids: Vec<String>,
    /// Pairs the validation PSNR was computed on.
    pub val_ids: Vec<String>,
    pub records: Vec<EpochDoc>,
}

impl HistoryDoc {
    /// `ids` names the dataset rows the history's indices refer to.
    pub fn new(history: &TrainHistory, seed: u64, ids: &[String]) -> HistoryDoc {
        let names = |idx: &[usize]| idx.iter().map(|&i| ids[i].clone()).collect();
        HistoryDoc {
            seed,
            best_epoch: history.best_epoch,
            train_ids: names(&history.train_indices),
            val_ids: names(history.eval_indices()),
            records: history
                .records
                .iter()
                .map(|r| EpochDoc {
                    epoch: r.epoch,
                    total: r.loss.total,
                    rec: r.loss.rec,
                    eyeliner: r.loss.eyeliner,
                    perceptual: r.loss.perceptual,
                    adversarial: r.loss.adversarial,
                    val_psnr_db: match r.val_psnr {
                        Psnr::Db(v) => Some(v),
                        Psnr::Identical => None,
                    },
                })
                .collect(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("history always serializes");
        text.push('\n');
        fs::write(path, text).map_err(Error::io(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<HistoryDoc> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

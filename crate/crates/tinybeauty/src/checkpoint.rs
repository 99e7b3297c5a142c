//! Weight files with a `key = value` metadata sidecar (`<weights>.meta`).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use tinybeauty_core::metrics::Psnr;
use tinybeauty_core::net::NetworkWeights;
use tinybeauty_core::train::LossWeights;

use crate::error::{Error, Result};
use crate::weights_io::{load_weights, save_weights};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointMeta {
    pub epoch: usize,
    pub seed: u64,
    pub loss_weights: LossWeights,
    pub val_psnr: Option<Psnr>,
}

impl CheckpointMeta {
    pub fn to_text(&self) -> String {
        let lw = &self.loss_weights;
        let mut s = String::new();
        writeln!(s, "epoch = {}", self.epoch).unwrap();
        writeln!(s, "seed = {}", self.seed).unwrap();
        writeln!(s, "w_rec = {:?}", lw.w_rec).unwrap();
        writeln!(s, "w_eyeliner = {:?}", lw.w_eyeliner).unwrap();
        writeln!(s, "lambda_per = {:?}", lw.lambda_per).unwrap();
        writeln!(s, "lambda_adv = {:?}", lw.lambda_adv).unwrap();
        match self.val_psnr {
            Some(Psnr::Db(v)) => writeln!(s, "val_psnr = {v:?}").unwrap(),
            Some(Psnr::Identical) => writeln!(s, "val_psnr = identical").unwrap(),
            None => {}
        }
        s
    }

    pub fn parse(text: &str) -> Result<CheckpointMeta> {
        let bad = |msg: String| Error::Config(format!("checkpoint metadata: {msg}"));
        let (mut epoch, mut seed, mut val_psnr) = (None, None, None);
        let mut lw = LossWeights::default();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("{k}: not a number: {v:?}")));
            match k {
                "epoch" => epoch = Some(v.parse().map_err(|_| bad(format!("epoch: {v:?}")))?),
                "seed" => seed = Some(v.parse().map_err(|_| bad(format!("seed: {v:?}")))?),
                "w_rec" => lw.w_rec = num(v)?,
                "w_eyeliner" => lw.w_eyeliner = num(v)?,
                "lambda_per" => lw.lambda_per = num(v)?,
                "lambda_adv" => lw.lambda_adv = num(v)?,
                "val_psnr" if v == "identical" => val_psnr = Some(Psnr::Identical),
                "val_psnr" => val_psnr = Some(Psnr::Db(num(v)?)),
                _ => return Err(bad(format!("unknown key {k:?}"))),
            }
        }
        Ok(CheckpointMeta {
            epoch: epoch.ok_or_else(|| bad("missing epoch".into()))?,
            seed: seed.ok_or_else(|| bad("missing seed".into()))?,
            loss_weights: lw,
            val_psnr,
        })
    }
}

pub fn meta_path(weights_path: &Path) -> PathBuf {
    let mut p = weights_path.as_os_str().to_owned();
    p.push(".meta");
    PathBuf::from(p)
}

pub fn save_checkpoint(path: impl AsRef<Path>, weights: &NetworkWeights, meta: &CheckpointMeta) -> Result<()> {
    let path = path.as_ref();
    save_weights(weights, path)?;
    let mp = meta_path(path);
    fs::write(&mp, meta.to_text()).map_err(Error::io(&mp))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(NetworkWeights, CheckpointMeta)> {
    let path = path.as_ref();
    let weights = load_weights(path)?;
    let mp = meta_path(path);
    let text = fs::read_to_string(&mp).map_err(Error::io(&mp))?;
    Ok((weights, CheckpointMeta::parse(&text)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_round_trip() {
        for val_psnr in [None, Some(Psnr::Identical), Some(Psnr::Db(31.993_123_456_789))] {
            let m = CheckpointMeta {
                epoch: 12,
                seed: u64::MAX,
                loss_weights: LossWeights { w_eyeliner: 0.0, lambda_per: 0.1 + 0.2, ..Default::default() },
                val_psnr,
            };
            assert_eq!(CheckpointMeta::parse(&m.to_text()).unwrap(), m);
        }
        assert!(CheckpointMeta::parse("epoch = 1\n").is_err());
        assert!(CheckpointMeta::parse("epoch = 1\nseed = 2\nfoo = 3\n").is_err());
    }

    #[test]
    fn sidecar_path() {
        assert_eq!(meta_path(Path::new("out/w.tbw")), PathBuf::from("out/w.tbw.meta"));
    }
}

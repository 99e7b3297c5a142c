//! TOML run configuration and style documents.
//!
//! Keys mirror the field names of the corresponding library types. Every key
//! is optional; missing keys take the library defaults.
//!
//! ```toml
//! [train]
//! learning_rate = 2e-4
//! epochs = 30
//!
//! [loss]
//! w_eyeliner = 1.0
//!
//! [rdm]
//! lambda_d = 0.8
//! blur_sigma = 1.0
//!
//! [data]
//! n_faces = 200
//! size = 128
//! style_ids = [0, 1]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tinybeauty_core::amplifier::RdmConfig;
use tinybeauty_core::net::NetworkConfig;
use tinybeauty_core::synth::{builtin_styles, StyleSpec};
use tinybeauty_core::train::{LossWeights, TrainConfig};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub train: TrainSection,
    pub loss: LossSection,
    pub rdm: RdmSection,
    pub data: DataSection,
    pub net: NetSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            learning_rate: d.learning_rate,
            beta1: d.beta1,
            beta2: d.beta2,
            eps: d.eps,
            epochs: d.epochs,
            batch_size: d.batch_size,
            validation_fraction: d.validation_fraction,
        }
    }
}

impl TrainSection {
    pub fn to_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            validation_fraction: self.validation_fraction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    pub w_rec: f64,
    pub w_eyeliner: f64,
    pub lambda_per: f64,
    pub lambda_adv: f64,
}

impl Default for LossSection {
    fn default() -> Self {
        let d = LossWeights::default();
        LossSection {
            w_rec: d.w_rec,
            w_eyeliner: d.w_eyeliner,
            lambda_per: d.lambda_per,
            lambda_adv: d.lambda_adv,
        }
    }
}

impl LossSection {
    pub fn to_weights(&self) -> LossWeights {
        LossWeights {
            w_rec: self.w_rec,
            w_eyeliner: self.w_eyeliner,
            lambda_per: self.lambda_per,
            lambda_adv: self.lambda_adv,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RdmSection {
    pub lambda_m: f64,
    pub lambda_d: f64,
    /// Blur of the procedural denoiser, in pixels.
    pub blur_sigma: f64,
}

impl Default for RdmSection {
    fn default() -> Self {
        let d = RdmConfig::default();
        RdmSection {
            lambda_m: d.lambda_m,
            lambda_d: d.lambda_d,
            blur_sigma: 1.0,
        }
    }
}

impl RdmSection {
    pub fn to_config(&self) -> RdmConfig {
        RdmConfig {
            lambda_m: self.lambda_m,
            lambda_d: self.lambda_d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub n_faces: usize,
    pub size: usize,
    /// Styles to generate; all loaded styles when absent.
    pub style_ids: Option<Vec<u32>>,
    /// Directory of style documents replacing the built-in styles.
    pub styles_dir: Option<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            n_faces: 200,
            size: 128,
            style_ids: None,
            styles_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetSection {
    pub stem_channels: usize,
    pub mid_channels: usize,
    pub bottleneck_channels: usize,
}

impl Default for NetSection {
    fn default() -> Self {
        let d = NetworkConfig::default();
        NetSection {
            stem_channels: d.stem_channels,
            mid_channels: d.mid_channels,
            bottleneck_channels: d.bottleneck_channels,
        }
    }
}

impl NetSection {
    pub fn to_config(&self) -> NetworkConfig {
        NetworkConfig::new(self.stem_channels, self.mid_channels, self.bottleneck_channels)
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_owned()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        Config::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Styles from `data.styles_dir`, or the built-in set.
    pub fn styles(&self) -> Result<Vec<StyleSpec>> {
        match &self.data.styles_dir {
            Some(dir) => load_styles_dir(dir),
            None => Ok(builtin_styles()),
        }
    }
}

/// One style document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleDoc {
    pub style_id: u32,
    pub name: String,
    pub lip_color: [f64; 3],
    pub lip_alpha: f64,
    pub eyeshadow_color: [f64; 3],
    pub eyeshadow_alpha: f64,
    pub eyeshadow_extent: f64,
    pub blush_color: [f64; 3],
    pub blush_alpha: f64,
    pub blush_radius: f64,
    pub eyeliner_color: [f64; 3],
    pub eyeliner_alpha: f64,
    pub eyeliner_thickness: u32,
}

impl From<&StyleSpec> for StyleDoc {
    fn from(s: &StyleSpec) -> Self {
        StyleDoc {
            style_id: s.style_id,
            name: s.name.clone(),
            lip_color: s.lip_color,
            lip_alpha: s.lip_alpha,
            eyeshadow_color: s.eyeshadow_color,
            eyeshadow_alpha: s.eyeshadow_alpha,
            eyeshadow_extent: s.eyeshadow_extent,
            blush_color: s.blush_color,
            blush_alpha: s.blush_alpha,
            blush_radius: s.blush_radius,
            eyeliner_color: s.eyeliner_color,
            eyeliner_alpha: s.eyeliner_alpha,
            eyeliner_thickness: s.eyeliner_thickness,
        }
    }
}

impl From<StyleDoc> for StyleSpec {
    fn from(d: StyleDoc) -> Self {
        StyleSpec {
            style_id: d.style_id,
            name: d.name,
            lip_color: d.lip_color,
            lip_alpha: d.lip_alpha,
            eyeshadow_color: d.eyeshadow_color,
            eyeshadow_alpha: d.eyeshadow_alpha,
            eyeshadow_extent: d.eyeshadow_extent,
            blush_color: d.blush_color,
            blush_alpha: d.blush_alpha,
            blush_radius: d.blush_radius,
            eyeliner_color: d.eyeliner_color,
            eyeliner_alpha: d.eyeliner_alpha,
            eyeliner_thickness: d.eyeliner_thickness,
        }
    }
}

pub fn style_to_toml(style: &StyleSpec) -> String {
    toml::to_string(&StyleDoc::from(style)).expect("style documents always serialize")
}

pub fn parse_style(text: &str) -> Result<StyleSpec> {
    let doc: StyleDoc = toml::from_str(text).map_err(|e| Error::Config(e.message().to_owned()))?;
    let style = StyleSpec::from(doc);
    style.validate()?;
    Ok(style)
}

pub fn load_style(path: impl AsRef<Path>) -> Result<StyleSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    parse_style(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Every `*.toml` style in `dir`, sorted by id. Duplicate ids are an error.
pub fn load_styles_dir(dir: impl AsRef<Path>) -> Result<Vec<StyleSpec>> {
    let dir = dir.as_ref();
    let mut styles = Vec::new();
    for entry in fs::read_dir(dir).map_err(Error::io(dir))? {
        let path = entry.map_err(Error::io(dir))?.path();
        if path.extension().is_some_and(|e| e == "toml") {
            styles.push(load_style(&path)?);
        }
    }
    styles.sort_by_key(|s| s.style_id);
    if let Some(w) = styles.windows(2).find(|w| w[0].style_id == w[1].style_id) {
        return Err(Error::Config(format!("duplicate style id {} in {}", w[0].style_id, dir.display())));
    }
    if styles.is_empty() {
        return Err(Error::Config(format!("no style documents in {}", dir.display())));
    }
    Ok(styles)
}

/// Writes `style_<id>.toml` for each style.
pub fn write_styles_dir(dir: impl AsRef<Path>, styles: &[StyleSpec]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    for s in styles {
        let path = dir.join(format!("style_{}.toml", s.style_id));
        fs::write(&path, style_to_toml(s)).map_err(Error::io(&path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.train.to_config(0), TrainConfig::default());
        assert_eq!(c.loss.to_weights(), LossWeights::default());
        assert_eq!(c.rdm.to_config(), RdmConfig::default());
        assert_eq!(c.net.to_config(), NetworkConfig::default());
    }

    #[test]
    fn partial_sections_override() {
        let c = Config::parse("[train]\nepochs = 3\n[loss]\nw_eyeliner = 0.0\n[data]\nstyle_ids = [1, 2]\n").unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.learning_rate, 2e-4);
        assert_eq!(c.loss.w_eyeliner, 0.0);
        assert_eq!(c.data.style_ids, Some(vec![1, 2]));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(Config::parse("[train]\nlr = 1.0\n"), Err(Error::Config(_))));
    }

    #[test]
    fn style_round_trip() {
        for s in builtin_styles() {
            assert_eq!(parse_style(&style_to_toml(&s)).unwrap(), s);
        }
        let mut bad = StyleDoc::from(&builtin_styles()[0]);
        bad.eyeliner_thickness = 0;
        assert!(parse_style(&toml::to_string(&bad).unwrap()).is_err());
    }
}

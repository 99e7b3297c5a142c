//! Dataset evaluation reports.

use std::fmt::Write as _;

use serde::{Serialize, Serializer};
use tinybeauty_core::metrics::{edge_sharpness, mean_psnr, psnr, region_error, Psnr};
use tinybeauty_core::net::{infer, NetworkWeights};
use tinybeauty_core::train::Sample;
use tinybeauty_core::{Error as CoreError, Tensor};

use crate::error::Result;

/// Metrics without a pretrained-network dependency are the only ones reported.
pub const OMITTED_METRICS_NOTE: &str = "FID and LPIPS are not computed: both require pretrained feature networks";

fn ser_psnr<S: Serializer>(p: &Psnr, s: S) -> Result<S::Ok, S::Error> {
    match p {
        Psnr::Db(v) => s.serialize_f64(*v),
        Psnr::Identical => s.serialize_str("identical"),
    }
}

fn ser_opt_psnr<S: Serializer>(p: &Option<Psnr>, s: S) -> Result<S::Ok, S::Error> {
    match p {
        Some(p) => ser_psnr(p, s),
        None => s.serialize_none(),
    }
}

/// Mean absolute error per region; `None` when the region mask is empty.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RegionErrors {
    pub face: Option<f64>,
    pub lips: Option<f64>,
    pub eyes: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageEval {
    pub id: String,
    #[serde(serialize_with = "ser_psnr")]
    pub psnr: Psnr,
    /// PSNR of the untouched input against the target.
    #[serde(serialize_with = "ser_psnr")]
    pub baseline_psnr: Psnr,
    pub region_error: RegionErrors,
    pub eye_sharpness: Option<f64>,
    pub target_eye_sharpness: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub images: Vec<ImageEval>,
    #[serde(serialize_with = "ser_opt_psnr")]
    pub mean_psnr: Option<Psnr>,
    #[serde(serialize_with = "ser_opt_psnr")]
    pub mean_baseline_psnr: Option<Psnr>,
    pub mean_region_error: RegionErrors,
    pub mean_eye_sharpness: Option<f64>,
    pub mean_target_eye_sharpness: Option<f64>,
    pub note: &'static str,
}

#[derive(Clone, Copy, Debug)]
pub struct EvalOptions<'a> {
    /// Without weights the prediction is the input itself.
    pub weights: Option<&'a NetworkWeights>,
    pub strength: f32,
    /// Run the network at this square resolution and resize its residual.
    pub net_size: Option<usize>,
}

impl Default for EvalOptions<'_> {
    fn default() -> Self {
        EvalOptions {
            weights: None,
            strength: 1.0,
            net_size: None,
        }
    }
}

fn masked<T>(r: tinybeauty_core::Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(CoreError::EmptyMask) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn predict(sample_input: &Tensor, opts: &EvalOptions) -> Result<Tensor> {
    Ok(match opts.weights {
        Some(w) => infer(w, sample_input, opts.strength, opts.net_size.map(|s| (s, s)))?,
        None => sample_input.clone(),
    })
}

pub fn evaluate_one(id: &str, sample: &Sample, opts: &EvalOptions) -> Result<ImageEval> {
    let pred = predict(&sample.input, opts)?;
    let m = &sample.masks;
    Ok(ImageEval {
        id: id.to_owned(),
        psnr: psnr(&pred, &sample.target, 1.0)?,
        baseline_psnr: psnr(&sample.input, &sample.target, 1.0)?,
        region_error: RegionErrors {
            face: masked(region_error(&pred, &sample.target, m.face()))?,
            lips: masked(region_error(&pred, &sample.target, m.lips()))?,
            eyes: masked(region_error(&pred, &sample.target, m.eyes()))?,
        },
        eye_sharpness: masked(edge_sharpness(&pred, m.eyes()))?,
        target_eye_sharpness: masked(edge_sharpness(&sample.target, m.eyes()))?,
    })
}

/// Evaluates `(id, sample)` pairs in order.
pub fn evaluate<'a>(items: impl IntoIterator<Item = (&'a str, &'a Sample)>, opts: &EvalOptions) -> Result<EvalReport> {
    let images = items.into_iter().map(|(id, s)| evaluate_one(id, s, opts)).collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        mean_psnr: mean_psnr(images.iter().map(|i| i.psnr)),
        mean_baseline_psnr: mean_psnr(images.iter().map(|i| i.baseline_psnr)),
        mean_region_error: RegionErrors {
            face: mean(images.iter().map(|i| i.region_error.face)),
            lips: mean(images.iter().map(|i| i.region_error.lips)),
            eyes: mean(images.iter().map(|i| i.region_error.eyes)),
        },
        mean_eye_sharpness: mean(images.iter().map(|i| i.eye_sharpness)),
        mean_target_eye_sharpness: mean(images.iter().map(|i| i.target_eye_sharpness)),
        images,
        note: OMITTED_METRICS_NOTE,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.6}"))
}

fn opt_psnr(p: Option<Psnr>) -> String {
    p.map_or_else(|| "n/a".to_owned(), |p| p.to_string())
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{:<24} {:>12} {:>12} {:>9} {:>9} {:>9} {:>9} {:>9}", "id", "psnr", "baseline", "err_face", "err_lips", "err_eyes", "eye_sharp", "tgt_sharp").unwrap();
        for i in &self.images {
            writeln!(
                s,
                "{:<24} {:>12} {:>12} {:>9} {:>9} {:>9} {:>9} {:>9}",
                i.id,
                i.psnr.to_string(),
                i.baseline_psnr.to_string(),
                opt(i.region_error.face),
                opt(i.region_error.lips),
                opt(i.region_error.eyes),
                opt(i.eye_sharpness),
                opt(i.target_eye_sharpness),
            )
            .unwrap();
        }
        writeln!(s, "images: {}", self.images.len()).unwrap();
        writeln!(s, "mean psnr: {} (baseline {})", opt_psnr(self.mean_psnr), opt_psnr(self.mean_baseline_psnr)).unwrap();
        let r = &self.mean_region_error;
        writeln!(s, "mean region error: face {} lips {} eyes {}", opt(r.face), opt(r.lips), opt(r.eyes)).unwrap();
        writeln!(s, "mean eye sharpness: {} (target {})", opt(self.mean_eye_sharpness), opt(self.mean_target_eye_sharpness)).unwrap();
        writeln!(s, "note: {}", self.note).unwrap();
        s
    }
}

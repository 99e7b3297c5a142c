//! On-disk paired datasets.
//!
//! ```text
//! <out_dir>/manifest.json
//! <out_dir>/pair_<seed>_<style>/{input,target,mask_face,mask_lips,mask_eyes}.png
//! ```
//!
//! Paths inside the manifest are relative to its directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tinybeauty_core::amplifier::{amplify_pairs, Denoiser, MaskSet, RdmConfig};
use tinybeauty_core::synth::{generate_pairs, seed_faces, Pair, StyleSpec};
use tinybeauty_core::train::Sample;
use tinybeauty_core::Tensor;

use crate::error::{Error, Result};
use crate::image_io::{read_png, write_png};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPaths {
    pub input: String,
    pub target: String,
    pub mask_face: String,
    pub mask_lips: String,
    pub mask_eyes: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub style_id: u32,
    /// Seed of the face this pair was rendered from.
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub paths: PairPaths,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// `"synthetic"` (painted targets) or `"amplified"` (composed targets).
    pub source: String,
    pub generator_seed: u64,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        m.check_ids()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("manifest always serializes");
        text.push('\n');
        fs::write(path, text).map_err(Error::io(path))
    }

    fn check_ids(&self) -> Result<()> {
        let mut ids: Vec<&str> = self.rows.iter().map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Manifest(format!("duplicate id {}", w[0])));
        }
        Ok(())
    }
}

/// The borrowed parts of a pair that get written to disk.
pub struct PairRef<'a> {
    pub id: &'a str,
    pub face_seed: u64,
    pub style_id: u32,
    pub input: &'a Tensor,
    pub target: &'a Tensor,
    pub masks: &'a MaskSet,
}

impl<'a> From<&'a Pair> for PairRef<'a> {
    fn from(p: &'a Pair) -> Self {
        PairRef {
            id: &p.id,
            face_seed: p.face_seed,
            style_id: p.style_id,
            input: &p.input,
            target: &p.target,
            masks: &p.masks,
        }
    }
}

/// Writes every pair plus the manifest under `out_dir`.
pub fn write_dataset<'a>(out_dir: impl AsRef<Path>, source: &str, generator_seed: u64, pairs: impl IntoIterator<Item = PairRef<'a>>) -> Result<Manifest> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(Error::io(out_dir))?;
    let mut rows = Vec::new();
    for p in pairs {
        let dir = out_dir.join(p.id);
        fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
        let rel = |name: &str| format!("{}/{name}.png", p.id);
        let paths = PairPaths {
            input: rel("input"),
            target: rel("target"),
            mask_face: rel("mask_face"),
            mask_lips: rel("mask_lips"),
            mask_eyes: rel("mask_eyes"),
        };
        write_png(p.input, out_dir.join(&paths.input))?;
        write_png(p.target, out_dir.join(&paths.target))?;
        write_png(p.masks.face(), out_dir.join(&paths.mask_face))?;
        write_png(p.masks.lips(), out_dir.join(&paths.mask_lips))?;
        write_png(p.masks.eyes(), out_dir.join(&paths.mask_eyes))?;
        let s = p.input.shape();
        rows.push(ManifestRow {
            id: p.id.to_owned(),
            style_id: p.style_id,
            seed: p.face_seed,
            width: s.w,
            height: s.h,
            paths,
        });
    }
    let manifest = Manifest {
        source: source.to_owned(),
        generator_seed,
        rows,
    };
    manifest.check_ids()?;
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// `n_faces` procedural faces, each painted with every style.
pub fn gen_dataset(n_faces: usize, styles: &[StyleSpec], size: usize, seed: u64, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    let pairs = generate_pairs(n_faces, styles, size, seed)?;
    write_dataset(out_dir, "synthetic", seed, pairs.iter().map(PairRef::from))
}

/// `n_faces` procedural seed faces, each amplified into every style through
/// the residual composition and latent blending.
pub fn amplify_dataset(
    n_faces: usize,
    style_ids: &[u32],
    size: usize,
    seed: u64,
    rdm: &RdmConfig,
    denoiser: &impl Denoiser,
    out_dir: impl AsRef<Path>,
) -> Result<Manifest> {
    rdm.validate()?;
    let seeds = seed_faces(n_faces, size, seed)?;
    let pairs = amplify_pairs(&seeds, style_ids, rdm, denoiser)?;
    write_dataset(
        out_dir,
        "amplified",
        seed,
        pairs.iter().map(|p| PairRef {
            id: &p.id,
            face_seed: p.face_seed,
            style_id: p.style_id,
            input: &p.input,
            target: &p.target,
            masks: &p.masks,
        }),
    )
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: Manifest,
    pub root: PathBuf,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Keeps only the rows of one style.
    pub fn filter_style(mut self, style_id: u32) -> Result<Dataset> {
        let keep: Vec<bool> = self.manifest.rows.iter().map(|r| r.style_id == style_id).collect();
        let mut it = keep.iter();
        self.manifest.rows.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        self.samples.retain(|_| *it.next().unwrap());
        if self.samples.is_empty() {
            return Err(Error::Manifest(format!("no rows with style {style_id}")));
        }
        Ok(self)
    }
}

fn load_row(root: &Path, row: &ManifestRow) -> Result<Sample> {
    let img = |p: &str, channels: usize| -> Result<Tensor> {
        let t = read_png(root.join(p))?;
        let s = t.shape();
        if s.c != channels || (s.h, s.w) != (row.height, row.width) {
            return Err(Error::Manifest(format!(
                "{}: {p} is {}×{}×{}, expected {channels}×{}×{}",
                row.id, s.c, s.h, s.w, row.height, row.width
            )));
        }
        Ok(t)
    };
    let masks = MaskSet::new(img(&row.paths.mask_face, 1)?, img(&row.paths.mask_lips, 1)?, img(&row.paths.mask_eyes, 1)?)?;
    Ok(Sample::new(img(&row.paths.input, 3)?, img(&row.paths.target, 3)?, masks)?)
}

/// Reads a manifest and every image it references.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<Dataset> {
    let manifest_path = manifest_path.as_ref();
    let manifest = Manifest::load(manifest_path)?;
    let root = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let samples = manifest.rows.iter().map(|r| load_row(&root, r)).collect::<Result<_>>()?;
    Ok(Dataset { manifest, root, samples })
}

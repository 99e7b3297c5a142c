//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use tinybeauty_core::amplifier::ProceduralDenoiser;
use tinybeauty_core::net::{infer, init_weights};
use tinybeauty_core::synth::StyleSpec;
use tinybeauty_core::train::{train_with, ConvFeatureExtractor, EXTRACTOR_SEED_SALT};

use crate::bench::{bench, BenchConfig};
use crate::checkpoint::{save_checkpoint, CheckpointMeta};
use crate::config::Config;
use crate::dataset::{amplify_dataset, gen_dataset, load_dataset, MANIFEST_FILE};
use crate::eval::{evaluate, EvalOptions};
use crate::history::HistoryDoc;
use crate::image_io::{read_png, write_png};
use crate::weights_io::load_weights;

#[derive(Debug, Parser)]
#[command(name = "tinybeauty", version, about = "Tiny residual makeup network: data, training, inference, evaluation")]
pub struct Cli {
    /// Seed for data generation, initialization and shuffling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render procedural faces and paint every style onto them.
    GenData(GenDataArgs),
    /// Build pairs through residual composition of a procedural denoiser.
    Amplify(AmplifyArgs),
    /// Train the network on a dataset manifest.
    Train(TrainArgs),
    /// Apply trained weights to PNG images.
    Infer(InferArgs),
    /// Report PSNR, region errors and eye sharpness over a manifest.
    Eval(EvalArgs),
    /// Time forward passes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n_faces: Option<usize>,
    #[arg(long)]
    pub size: Option<usize>,
    /// Comma-separated style ids; defaults to every loaded style.
    #[arg(long, value_delimiter = ',')]
    pub style_ids: Option<Vec<u32>>,
    /// Directory of style TOML documents.
    #[arg(long)]
    pub styles_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct AmplifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub lambda_m: Option<f64>,
    #[arg(long)]
    pub lambda_d: Option<f64>,
    #[arg(long)]
    pub blur_sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output weight file; `<out>.meta` and `<out>.history.json` are written beside it.
    #[arg(long)]
    pub out: PathBuf,
    /// Train on one style of a multi-style manifest.
    #[arg(long)]
    pub style_id: Option<u32>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub w_eyeliner: Option<f64>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Residual strength in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub strength: f32,
    /// Run the network at this square size and resize its residual.
    #[arg(long)]
    pub net_size: Option<usize>,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Without weights the input itself is scored.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub strength: f32,
    #[arg(long)]
    pub net_size: Option<usize>,
    #[arg(long)]
    pub style_id: Option<u32>,
    /// Restrict to the validation pairs of a training history.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// Seeded initial weights when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
    #[arg(long, default_value_t = 20)]
    pub iters: usize,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 on success, 2 on usage errors, 1 on other failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            1
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<Config> {
    Ok(match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    })
}

pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    let mut config = load_config(cli)?;
    match &cli.command {
        Command::GenData(a) => {
            let (styles, n, size) = data_settings(&mut config, &a.data)?;
            let m = gen_dataset(n, &styles, size, cli.seed, &a.data.out)?;
            println!("wrote {} pairs to {}", m.rows.len(), a.data.out.join(MANIFEST_FILE).display());
        }
        Command::Amplify(a) => {
            let (styles, n, size) = data_settings(&mut config, &a.data)?;
            if let Some(v) = a.lambda_m {
                config.rdm.lambda_m = v;
            }
            if let Some(v) = a.lambda_d {
                config.rdm.lambda_d = v;
            }
            if let Some(v) = a.blur_sigma {
                config.rdm.blur_sigma = v;
            }
            let ids: Vec<u32> = styles.iter().map(|s| s.style_id).collect();
            let denoiser = ProceduralDenoiser::new(config.rdm.blur_sigma, styles)?;
            let m = amplify_dataset(n, &ids, size, cli.seed, &config.rdm.to_config(), &denoiser, &a.data.out)?;
            println!("wrote {} pairs to {}", m.rows.len(), a.data.out.join(MANIFEST_FILE).display());
        }
        Command::Train(a) => cmd_train(cli, &mut config, a)?,
        Command::Infer(a) => {
            if !(0.0..=1.0).contains(&a.strength) {
                bail!("--strength must lie in [0, 1], got {}", a.strength);
            }
            let weights = load_weights(&a.weights)?;
            fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
            for input in &a.inputs {
                let image = read_png(input)?;
                if image.shape().c != 3 {
                    bail!("{}: expected an RGB image", input.display());
                }
                let out = infer(&weights, &image, a.strength, a.net_size.map(|s| (s, s))).with_context(|| input.display().to_string())?;
                let name = input.file_name().with_context(|| format!("{}: no file name", input.display()))?;
                let dest = a.out_dir.join(name);
                write_png(&out, &dest)?;
                println!("{} -> {}", input.display(), dest.display());
            }
        }
        Command::Eval(a) => cmd_eval(a)?,
        Command::Bench(a) => {
            let weights = match &a.weights {
                Some(p) => load_weights(p)?,
                None => init_weights(&config.net.to_config(), cli.seed),
            };
            let report = bench(
                &weights,
                &BenchConfig {
                    height: a.size,
                    width: a.size,
                    warmup: a.warmup,
                    iters: a.iters,
                    threads: a.threads,
                    seed: cli.seed,
                },
            )?;
            print!("{}", report.to_text());
            if let Some(p) = &a.json {
                write_text(p, &report.to_json())?;
            }
        }
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))
}

fn data_settings(config: &mut Config, a: &DataArgs) -> anyhow::Result<(Vec<StyleSpec>, usize, usize)> {
    if let Some(d) = &a.styles_dir {
        config.data.styles_dir = Some(d.clone());
    }
    if let Some(ids) = &a.style_ids {
        config.data.style_ids = Some(ids.clone());
    }
    let n = a.n_faces.unwrap_or(config.data.n_faces);
    let size = a.size.unwrap_or(config.data.size);
    let mut styles = config.styles()?;
    if let Some(ids) = &config.data.style_ids {
        for id in ids {
            if !styles.iter().any(|s| s.style_id == *id) {
                bail!("unknown style id {id}");
            }
        }
        styles.retain(|s| ids.contains(&s.style_id));
    }
    Ok((styles, n, size))
}

fn cmd_train(cli: &Cli, config: &mut Config, a: &TrainArgs) -> anyhow::Result<()> {
    if let Some(v) = a.epochs {
        config.train.epochs = v;
    }
    if let Some(v) = a.batch_size {
        config.train.batch_size = v;
    }
    if let Some(v) = a.learning_rate {
        config.train.learning_rate = v;
    }
    if let Some(v) = a.w_eyeliner {
        config.loss.w_eyeliner = v;
    }
    let mut data = load_dataset(&a.manifest)?;
    if let Some(id) = a.style_id {
        data = data.filter_style(id)?;
    }
    let train_cfg = config.train.to_config(cli.seed);
    let loss = config.loss.to_weights();
    let extractor = ConvFeatureExtractor::seeded(cli.seed ^ EXTRACTOR_SEED_SALT);
    let quiet = a.quiet;
    let (weights, history) = train_with(&data.samples, &config.net.to_config(), &train_cfg, &loss, &extractor, |r| {
        if !quiet {
            println!("epoch {:>3}  loss {:.6}  val psnr {}", r.epoch, r.loss.total, r.val_psnr);
        }
    })?;
    let best = history.best();
    save_checkpoint(
        &a.out,
        &weights,
        &CheckpointMeta {
            epoch: best.epoch,
            seed: cli.seed,
            loss_weights: loss,
            val_psnr: Some(best.val_psnr),
        },
    )?;
    let ids: Vec<String> = data.manifest.rows.iter().map(|r| r.id.clone()).collect();
    let mut hist_path = a.out.clone().into_os_string();
    hist_path.push(".history.json");
    HistoryDoc::new(&history, cli.seed, &ids).save(PathBuf::from(hist_path))?;
    println!("best epoch {} (val psnr {}), weights written to {}", best.epoch, best.val_psnr, a.out.display());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> anyhow::Result<()> {
    let mut data = load_dataset(&a.manifest)?;
    if let Some(id) = a.style_id {
        data = data.filter_style(id)?;
    }
    let weights = a.weights.as_ref().map(load_weights).transpose()?;
    let keep: Option<Vec<String>> = a.history.as_ref().map(|h| HistoryDoc::load(h).map(|d| d.val_ids)).transpose()?;
    let items: Vec<(&str, _)> = data
        .manifest
        .rows
        .iter()
        .zip(&data.samples)
        .filter(|(r, _)| keep.as_ref().is_none_or(|k| k.contains(&r.id)))
        .map(|(r, s)| (r.id.as_str(), s))
        .collect();
    if items.is_empty() {
        bail!("no pairs selected for evaluation");
    }
    let report = evaluate(
        items,
        &EvalOptions {
            weights: weights.as_ref(),
            strength: a.strength,
            net_size: a.net_size,
        },
    )?;
    print!("{}", report.to_text());
    if let Some(p) = &a.json {
        write_text(p, &report.to_json())?;
    }
    Ok(())
}

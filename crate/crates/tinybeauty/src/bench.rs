//! Forward-pass latency benchmark.
//!
//! Timings cover the network forward pass only; image decoding is excluded.
//! With several threads each worker runs whole forward passes on its own
//! image, so a single pass is never split across threads.

use std::fmt::Write as _;
use std::sync::Barrier;
use std::time::{Duration, Instant};

use serde::Serialize;
use tinybeauty_core::net::{flops_estimate, forward, NetworkWeights, IMAGE_CHANNELS};
use tinybeauty_core::synth::derive_seed;
use tinybeauty_core::{Shape, Tensor};

use crate::error::{Error, Result};

pub const MIN_ITERS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub height: usize,
    pub width: usize,
    pub warmup: usize,
    /// Timed passes per thread.
    pub iters: usize,
    pub threads: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            height: 256,
            width: 256,
            warmup: 3,
            iters: 20,
            threads: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub height: usize,
    pub width: usize,
    pub warmup: usize,
    pub iters: usize,
    pub threads: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub flops: u64,
    pub params: usize,
}

/// A deterministic pseudo-random image in `[0, 1)`.
pub fn bench_input(h: usize, w: usize, seed: u64) -> Tensor {
    let shape = Shape::new(1, IMAGE_CHANNELS, h, w);
    let data = (0..shape.numel() as u64).map(|i| (derive_seed(seed, i) >> 40) as f32 / (1u64 << 24) as f32).collect();
    Tensor::from_vec(shape, data).expect("length matches shape")
}

fn stats_ms(mut samples: Vec<Duration>) -> (f64, f64, f64) {
    samples.sort_unstable();
    let ms: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e3).collect();
    let n = ms.len();
    let mean = ms.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 { ms[n / 2] } else { 0.5 * (ms[n / 2 - 1] + ms[n / 2]) };
    let p95 = ms[((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1];
    (mean, median, p95)
}

pub fn bench(weights: &NetworkWeights, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.iters < MIN_ITERS {
        return Err(Error::Config(format!("bench needs at least {MIN_ITERS} iterations, got {}", cfg.iters)));
    }
    if cfg.warmup == 0 || cfg.threads == 0 {
        return Err(Error::Config("bench warmup and thread counts must be >= 1".into()));
    }
    // surfaces dimension errors before any thread starts
    forward(weights, &bench_input(cfg.height, cfg.width, cfg.seed))?;

    let barrier = Barrier::new(cfg.threads);
    let per_thread: Vec<Result<Vec<Duration>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.threads)
            .map(|t| {
                let barrier = &barrier;
                scope.spawn(move || -> Result<Vec<Duration>> {
                    let input = bench_input(cfg.height, cfg.width, cfg.seed.wrapping_add(t as u64));
                    for _ in 0..cfg.warmup {
                        std::hint::black_box(forward(weights, &input)?);
                    }
                    barrier.wait();
                    let mut times = Vec::with_capacity(cfg.iters);
                    for _ in 0..cfg.iters {
                        let start = Instant::now();
                        std::hint::black_box(forward(weights, std::hint::black_box(&input))?);
                        times.push(start.elapsed());
                    }
                    Ok(times)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("bench worker panicked")).collect()
    });
    let mut samples = Vec::with_capacity(cfg.iters * cfg.threads);
    for r in per_thread {
        samples.extend(r?);
    }
    let (mean_ms, median_ms, p95_ms) = stats_ms(samples);
    Ok(BenchReport {
        height: cfg.height,
        width: cfg.width,
        warmup: cfg.warmup,
        iters: cfg.iters,
        threads: cfg.threads,
        mean_ms,
        median_ms,
        p95_ms,
        flops: flops_estimate(weights.config(), cfg.height, cfg.width),
        params: weights.param_count(),
    })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "input: 1x{}x{}x{}", IMAGE_CHANNELS, self.height, self.width).unwrap();
        writeln!(s, "threads: {}  warmup: {}  iters: {}", self.threads, self.warmup, self.iters).unwrap();
        writeln!(s, "latency ms: mean {:.3}  median {:.3}  p95 {:.3}", self.mean_ms, self.median_ms, self.p95_ms).unwrap();
        writeln!(s, "flops: {}", self.flops).unwrap();
        writeln!(s, "params: {}", self.params).unwrap();
        s
    }
}

use tinybeauty::bench::{bench, BenchConfig};
use tinybeauty::eval::{evaluate, EvalOptions};
use tinybeauty_core::metrics::{psnr, Psnr};
use tinybeauty_core::net::{build_default, flops_estimate, infer, init_weights, NetworkWeights};
use tinybeauty_core::synth::{builtin_styles, generate_pairs};
use tinybeauty_core::train::Sample;

fn samples() -> Vec<(String, Sample)> {
    generate_pairs(3, &builtin_styles()[..2], 32, 1)
        .unwrap()
        .into_iter()
        .map(|p| (p.id.clone(), Sample::new(p.input, p.target, p.masks).unwrap()))
        .collect()
}

#[test]
fn eval_without_weights_scores_the_input() {
    let s = samples();
    let r = evaluate(s.iter().map(|(id, s)| (id.as_str(), s)), &EvalOptions::default()).unwrap();
    assert_eq!(r.images.len(), 6);
    for (img, (_, sample)) in r.images.iter().zip(&s) {
        assert_eq!(img.psnr, img.baseline_psnr);
        assert_eq!(img.psnr, psnr(&sample.input, &sample.target, 1.0).unwrap());
        assert!(img.region_error.lips.unwrap() > 0.0);
        assert!(img.target_eye_sharpness.unwrap() > img.eye_sharpness.unwrap());
    }
    assert!(r.mean_psnr.unwrap() < Psnr::Identical);
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert!(json["note"].as_str().unwrap().contains("LPIPS"));
}

#[test]
fn eval_with_weights_uses_network_prediction() {
    let s = samples();
    let mut w = init_weights(&build_default(), 3);
    for p in w.params_mut() {
        if p.name.starts_with("out.") {
            p.value = p.value.map(|_| 0.01);
        }
    }
    let opts = EvalOptions { weights: Some(&w), strength: 1.0, net_size: Some(16) };
    let r = evaluate(s.iter().map(|(id, s)| (id.as_str(), s)), &opts).unwrap();
    for (img, (_, sample)) in r.images.iter().zip(&s) {
        let pred = infer(&w, &sample.input, 1.0, Some((16, 16))).unwrap();
        assert_eq!(img.psnr, psnr(&pred, &sample.target, 1.0).unwrap());
        assert_ne!(img.psnr, img.baseline_psnr);
    }
}

#[test]
fn infer_with_zero_residual_is_identity_at_any_net_size() {
    let w = NetworkWeights::<f32>::zeros(&build_default());
    let (_, s) = &samples()[0];
    for net in [None, Some((16, 16)), Some((8, 12))] {
        assert_eq!(&infer(&w, &s.input, 1.0, net).unwrap(), &s.input);
    }
}

#[test]
fn bench_report_is_consistent() {
    let w = init_weights(&build_default(), 0);
    let cfg = BenchConfig { height: 32, width: 32, warmup: 1, iters: 10, threads: 2, seed: 1 };
    let r = bench(&w, &cfg).unwrap();
    assert_eq!(r.flops, flops_estimate(&build_default(), 32, 32));
    assert_eq!(r.params, w.param_count());
    assert_eq!(r.threads, 2);
    assert!(r.mean_ms > 0.0 && r.median_ms > 0.0);
    assert!(r.median_ms <= r.p95_ms);

    assert!(bench(&w, &BenchConfig { iters: 9, ..cfg }).is_err());
    assert!(bench(&w, &BenchConfig { threads: 0, ..cfg }).is_err());
    assert!(bench(&w, &BenchConfig { height: 30, ..cfg }).is_err());
}

#[test]
fn latency_scales_with_pixel_count() {
    let w = init_weights(&build_default(), 0);
    let at = |size| {
        let cfg = BenchConfig { height: size, width: size, warmup: 2, iters: 15, threads: 1, seed: 0 };
        bench(&w, &cfg).unwrap().median_ms
    };
    let (small, large) = (at(64), at(128));
    let ratio = large / small;
    assert!((2.0..=8.0).contains(&ratio), "128²/64² latency ratio {ratio:.2} ({small:.3} ms -> {large:.3} ms)");
}

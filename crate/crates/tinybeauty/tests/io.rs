use tinybeauty::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use tinybeauty::config::{load_styles_dir, write_styles_dir, Config};
use tinybeauty::dataset::{gen_dataset, load_dataset, Manifest};
use tinybeauty::image_io::{quantized, read_png, write_png};
use tinybeauty::weights_io::{load_weights, save_weights};
use tinybeauty::Error;
use tinybeauty_core::metrics::Psnr;
use tinybeauty_core::net::{build_default, init_weights};
use tinybeauty_core::synth::{builtin_styles, generate_pairs};
use tinybeauty_core::train::LossWeights;

#[test]
fn weights_file_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.tbw");
    let w = init_weights(&build_default(), 11);
    save_weights(&w, &path).unwrap();
    assert_eq!(load_weights(&path).unwrap(), w);

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(load_weights(&path), Err(Error::Truncated)));
    assert!(matches!(load_weights(dir.path().join("missing")), Err(Error::Io { .. })));
}

#[test]
fn checkpoint_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.tbw");
    let w = init_weights(&build_default(), 1);
    let meta = CheckpointMeta {
        epoch: 7,
        seed: 42,
        loss_weights: LossWeights { w_eyeliner: 0.0, ..Default::default() },
        val_psnr: Some(Psnr::Db(30.25)),
    };
    save_checkpoint(&path, &w, &meta).unwrap();
    let text = std::fs::read_to_string(dir.path().join("ck.tbw.meta")).unwrap();
    assert!(text.contains("epoch = 7") && text.contains("w_eyeliner = 0.0"));
    assert_eq!(load_checkpoint(&path).unwrap(), (w, meta));
}

#[test]
fn grayscale_mask_reads_single_channel() {
    let dir = tempfile::tempdir().unwrap();
    let pair = &generate_pairs(1, &builtin_styles()[..1], 32, 0).unwrap()[0];
    let p = dir.path().join("m.png");
    write_png(pair.masks.eyes(), &p).unwrap();
    let back = read_png(&p).unwrap();
    assert_eq!(back.shape().c, 1);
    assert_eq!(back, quantized(pair.masks.eyes()));
}

#[test]
fn dataset_round_trip_matches_quantized_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let styles = builtin_styles();
    let m = gen_dataset(2, &styles[1..3], 32, 5, dir.path()).unwrap();
    assert_eq!(Manifest::load(dir.path().join("manifest.json")).unwrap(), m);
    let pairs = generate_pairs(2, &styles[1..3], 32, 5).unwrap();
    let data = load_dataset(dir.path().join("manifest.json")).unwrap();
    assert_eq!(data.samples.len(), 4);
    for ((row, sample), pair) in m.rows.iter().zip(&data.samples).zip(&pairs) {
        assert_eq!(row.id, pair.id);
        assert_eq!(row.seed, pair.face_seed);
        assert_eq!(sample.input, quantized(&pair.input));
        assert_eq!(sample.target, quantized(&pair.target));
        assert_eq!(sample.masks.lips(), &quantized(pair.masks.lips()));
    }
    let only = data.filter_style(2).unwrap();
    assert!(only.manifest.rows.iter().all(|r| r.style_id == 2));
    assert_eq!(only.samples.len(), 2);

    assert!(gen_dataset(0, &styles, 32, 5, dir.path().join("x")).is_err());
    assert!(gen_dataset(2, &[], 32, 5, dir.path().join("y")).is_err());
}

#[test]
fn manifest_with_duplicate_ids_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = gen_dataset(1, &builtin_styles()[..1], 16, 0, dir.path()).unwrap();
    m.rows.push(m.rows[0].clone());
    m.save(dir.path().join("dup.json")).unwrap();
    assert!(matches!(Manifest::load(dir.path().join("dup.json")), Err(Error::Manifest(_))));
}

#[test]
fn styles_dir_round_trip_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let styles_dir = dir.path().join("styles");
    write_styles_dir(&styles_dir, &builtin_styles()).unwrap();
    assert_eq!(load_styles_dir(&styles_dir).unwrap(), builtin_styles());

    let cfg_path = dir.path().join("c.toml");
    std::fs::write(&cfg_path, format!("[data]\nstyles_dir = {:?}\n", styles_dir.to_str().unwrap())).unwrap();
    let cfg = Config::load(&cfg_path).unwrap();
    assert_eq!(cfg.styles().unwrap(), builtin_styles());

    std::fs::copy(styles_dir.join("style_1.toml"), styles_dir.join("copy.toml")).unwrap();
    assert!(matches!(load_styles_dir(&styles_dir), Err(Error::Config(_))));
}

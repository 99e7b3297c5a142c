use proptest::prelude::*;
use tinybeauty_core::amplifier::{changed_mask, compose_unclamped, latent_blend, ConditionPayload, GaussianDenoiser, RdmConfig};
use tinybeauty_core::metrics::{psnr, Psnr};
use tinybeauty_core::net::{apply_residual, forward, init_weights, NetworkConfig};
use tinybeauty_core::ops::{resize, sobel, ResizeMode};
use tinybeauty_core::synth::{builtin_styles, face_params_for_seed, gen_face, paint_makeup};
use tinybeauty_core::{Shape, Tensor};

fn image(c: usize, h: usize, w: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(0.0f32..=1.0, c * h * w).prop_map(move |d| Tensor::from_vec(Shape::new(1, c, h, w), d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn psnr_matches_direct_mse_and_is_symmetric(a in image(3, 6, 5), b in image(3, 6, 5)) {
        let mse = a.data().iter().zip(b.data()).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum::<f64>() / a.len() as f64;
        let p = psnr(&a, &b, 1.0).unwrap();
        prop_assert_eq!(p, psnr(&b, &a, 1.0).unwrap());
        match p {
            Psnr::Db(v) => prop_assert!((v - 10.0 * (1.0 / mse).log10()).abs() < 1e-9),
            Psnr::Identical => prop_assert_eq!(mse, 0.0),
        }
    }

    #[test]
    fn binary_blend_copies_exactly(s in image(3, 5, 7), o in image(3, 5, 7), bits in prop::collection::vec(any::<bool>(), 35)) {
        let mask = Tensor::from_vec(Shape::new(1, 1, 5, 7), bits.iter().map(|&b| b as u8 as f32).collect()).unwrap();
        let out = latent_blend(&s, &o, &mask).unwrap();
        for c in 0..3 {
            for (i, &b) in bits.iter().enumerate() {
                let src = if b { &s } else { &o };
                prop_assert_eq!(out.plane(0, c)[i].to_bits(), src.plane(0, c)[i].to_bits());
            }
        }
    }

    #[test]
    fn neutral_composition_is_identity(seed in 0u64..1000, sigma in 0.0f64..2.5) {
        let (x, masks) = gen_face(&face_params_for_seed(seed), 32, seed).unwrap();
        let cond = ConditionPayload::new(0, masks, 1.0).unwrap();
        let y = compose_unclamped(&x, &GaussianDenoiser { sigma }, &cond, &RdmConfig { lambda_m: 0.0, lambda_d: 1.0 }).unwrap();
        prop_assert_eq!(y, x);
    }

    #[test]
    fn painting_stays_inside_changed_mask(seed in 0u64..1000, style in 0usize..5) {
        let (x, masks) = gen_face(&face_params_for_seed(seed), 48, seed).unwrap();
        let y = paint_makeup(&x, &masks, &builtin_styles()[style]).unwrap();
        let m = changed_mask(&masks);
        for c in 0..3 {
            for (i, (&a, &b)) in x.plane(0, c).iter().zip(y.plane(0, c)).enumerate() {
                if m.data()[i] == 0.0 {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn constant_images_are_fixed_points(v in 0.0f32..=1.0, h in 3usize..9, w in 3usize..9) {
        let x = Tensor::full(Shape::new(1, 2, h, w), v);
        prop_assert!(sobel(&x).unwrap().data().iter().all(|&g| g == 0.0));
        for mode in [ResizeMode::Nearest, ResizeMode::Bilinear] {
            prop_assert!(resize(&x, 2 * h + 1, w + 3, mode).unwrap().data().iter().all(|&g| g == v));
        }
    }

    #[test]
    fn fresh_network_is_identity(x in image(3, 8, 12), seed in any::<u64>()) {
        let w = init_weights(&NetworkConfig::new(4, 6, 8), seed);
        prop_assert_eq!(apply_residual(&x, &forward(&w, &x).unwrap(), 1.0).unwrap(), x);
    }
}

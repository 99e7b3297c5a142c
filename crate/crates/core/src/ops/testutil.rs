//! Finite-difference oracle and deterministic fillers for unit tests.

use alloc::vec::Vec;

use crate::real::Real;
use crate::tensor::{Shape, Tensor};

/// Values in `[-1, 1)` from a splitmix64 stream.
pub fn lcg_tensor<T: Real>(shape: Shape, seed: u64) -> Tensor<T> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
    let data: Vec<T> = (0..shape.numel())
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            T::of((z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
        })
        .collect();
    Tensor::from_vec(shape, data).unwrap()
}

/// Central-difference gradient of `f` at `x`.
pub fn numeric_grad(x: &Tensor<f64>, mut f: impl FnMut(&Tensor<f64>) -> f64) -> Tensor<f64> {
    let h = 1e-5;
    let mut probe = x.clone();
    let mut g = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let fp = f(&probe);
        probe.data_mut()[i] = orig - h;
        let fm = f(&probe);
        probe.data_mut()[i] = orig;
        g.data_mut()[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, 1e-5)`. The floor keeps gradients that are
/// analytically zero (e.g. a conv bias feeding instance norm) from turning
/// finite-difference noise into a relative error of 1.
pub fn rel_err(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    let norm = |t: &[f64]| t.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = norm(a.data()).max(norm(b.data()));
    diff / scale.max(1e-5)
}

#[track_caller]
pub fn fd_check(x: &Tensor<f64>, analytic: &Tensor<f64>, tol: f64, f: impl FnMut(&Tensor<f64>) -> f64) {
    let numeric = numeric_grad(x, f);
    let err = rel_err(analytic, &numeric);
    assert!(err < tol, "relative error {err:e} exceeds {tol:e}");
}

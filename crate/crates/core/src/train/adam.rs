use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("adam", "learning_rate must be > 0"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::invalid("adam", alloc::format!("{name} must lie in (0, 1), got {b}")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("adam", "eps must be > 0"));
        }
        Ok(())
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T: Real = f32> {
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor<T>>) -> Self {
        let m: Vec<Tensor<T>> = params.into_iter().map(|p| Tensor::zeros(p.shape())).collect();
        AdamState { v: m.clone(), m, t: 0 }
    }
}

/// One bias-corrected Adam update of every parameter tensor.
pub fn adam_step<'a, T: Real>(
    params: impl IntoIterator<Item = &'a mut Tensor<T>>,
    grads: &[Tensor<T>],
    state: &mut AdamState<T>,
    hyper: &AdamConfig,
) -> Result<()> {
    hyper.validate()?;
    let params: Vec<&mut Tensor<T>> = params.into_iter().collect();
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::invalid(
            "adam_step",
            alloc::format!("{} params, {} grads, {} state slots", params.len(), grads.len(), state.m.len()),
        ));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.m) {
        if p.shape() != g.shape() || p.shape() != m.shape() {
            return Err(Error::ShapeMismatch {
                op: "adam_step",
                expected: p.shape(),
                got: g.shape(),
            });
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (T::of(hyper.beta1), T::of(hyper.beta2));
    let (c1, c2) = (T::of(1.0 - hyper.beta1), T::of(1.0 - hyper.beta2));
    let bc1 = T::of(1.0 - libm_powi(hyper.beta1, t));
    let bc2 = T::of(1.0 - libm_powi(hyper.beta2, t));
    let (lr, eps) = (T::of(hyper.learning_rate), T::of(hyper.eps));
    for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        for (((pv, &gv), mv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut()) {
            *mv = b1 * *mv + c1 * gv;
            *vv = b2 * *vv + c2 * gv * gv;
            let m_hat = *mv / bc1;
            let v_hat = *vv / bc2;
            *pv -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

fn libm_powi(x: f64, n: i32) -> f64 {
    num_traits::Float::powi(x, n)
}

#[cfg(test)]
mod tests {
    use alloc::vec;

    use super::*;
    use crate::tensor::Shape;

    fn scalar(v: f64) -> Tensor<f64> {
        Tensor::from_vec(Shape::new(1, 1, 1, 1), vec![v]).unwrap()
    }

    #[test]
    fn zero_grads_leave_params_and_advance_step() {
        let mut p = vec![scalar(0.3), Tensor::full(Shape::new(1, 2, 2, 2), -1.0)];
        let before = p.clone();
        let grads: Vec<_> = p.iter().map(|t| Tensor::zeros(t.shape())).collect();
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &grads, &mut st, &AdamConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn first_step_closed_form() {
        let h = AdamConfig::default();
        for g in [0.5, -3.0, 1e-3] {
            let mut p = vec![scalar(1.0)];
            let mut st = AdamState::new(&p);
            adam_step(&mut p, &[scalar(g)], &mut st, &h).unwrap();
            // m̂ = g, v̂ = g², so Δ = −lr·g/(|g| + eps)
            let want = 1.0 - h.learning_rate * g / (g.abs() + h.eps);
            assert!((p[0].data()[0] - want).abs() < 1e-15, "{g}");
            assert!(((1.0 - p[0].data()[0]).abs() - h.learning_rate).abs() < h.learning_rate * 1e-4);
        }
    }

    #[test]
    fn second_step_matches_hand_computation() {
        let h = AdamConfig { learning_rate: 0.1, ..AdamConfig::default() };
        let mut p = vec![scalar(0.0)];
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &[scalar(1.0)], &mut st, &h).unwrap();
        adam_step(&mut p, &[scalar(-2.0)], &mut st, &h).unwrap();
        let (m1, v1) = (0.1, 0.001);
        let (m2, v2) = (0.9 * m1 + 0.1 * -2.0, 0.999 * v1 + 0.001 * 4.0);
        let step2 = 0.1 * (m2 / (1.0 - 0.81)) / ((v2 / (1.0 - 0.999f64.powi(2))).sqrt() + 1e-8);
        let want = -0.1 * 1.0 / (1.0 + 1e-8) - step2;
        assert!((p[0].data()[0] - want).abs() < 1e-12);
    }

    #[test]
    fn deterministic_trajectories() {
        let run = || {
            let mut p = vec![Tensor::full(Shape::new(1, 3, 2, 2), 0.5f32)];
            let mut st = AdamState::new(&p);
            for i in 0..20 {
                let g = p[0].map(|v| v * (i as f32 + 1.0).sin());
                adam_step(&mut p, &[g], &mut st, &AdamConfig::default()).unwrap();
            }
            (p, st)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_bad_hyper_and_shapes() {
        let mut p = vec![scalar(0.0)];
        let mut st = AdamState::new(&p);
        let bad = AdamConfig { beta1: 1.0, ..AdamConfig::default() };
        assert!(adam_step(&mut p, &[scalar(1.0)], &mut st, &bad).is_err());
        let wrong = Tensor::zeros(Shape::new(1, 2, 1, 1));
        assert!(adam_step(&mut p, &[wrong], &mut st, &AdamConfig::default()).is_err());
    }
}

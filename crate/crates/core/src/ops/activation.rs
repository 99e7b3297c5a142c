use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

pub fn relu_forward<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Gradient passes only where the saved input is strictly positive; a tie at
/// exactly zero blocks it.
pub fn relu_backward<T: Real>(grad_out: &Tensor<T>, saved_x: &Tensor<T>) -> Result<Tensor<T>> {
    if grad_out.shape() != saved_x.shape() {
        return Err(Error::ShapeMismatch {
            op: "relu_backward",
            expected: saved_x.shape(),
            got: grad_out.shape(),
        });
    }
    let mut g = grad_out.clone();
    for (o, &x) in g.data_mut().iter_mut().zip(saved_x.data()) {
        if !(x > T::zero()) {
            *o = T::zero();
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::testutil::{fd_check, lcg_tensor};
    use crate::tensor::Shape;

    #[test]
    fn negative_to_zero_positive_identity() {
        let neg = Tensor::<f32>::full(Shape::new(1, 2, 3, 3), -0.5);
        assert!(relu_forward(&neg).data().iter().all(|&v| v == 0.0));
        let pos: Tensor<f32> = lcg_tensor::<f32>(Shape::new(1, 2, 3, 3), 1).map(|v| v.abs() + 0.1);
        assert_eq!(relu_forward(&pos), pos);
    }

    #[test]
    fn zero_tie_blocks_gradient() {
        let x = Tensor::<f64>::zeros(Shape::new(1, 1, 2, 2));
        let g = Tensor::full(x.shape(), 1.0);
        assert_eq!(relu_backward(&g, &x).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let x: Tensor<f64> = lcg_tensor(Shape::new(2, 3, 8, 8), 3);
        let probe: Tensor<f64> = lcg_tensor(x.shape(), 4);
        let g = relu_backward(&probe, &x).unwrap();
        fd_check(&x, &g, 1e-4, |t| {
            relu_forward(t).data().iter().zip(probe.data()).map(|(a, b)| a * b).sum()
        });
    }
}

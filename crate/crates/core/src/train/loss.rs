//! Training losses. Each returns the scalar value (accumulated in `f64`) and
//! its gradient with respect to the prediction.

use crate::error::{Error, Result};
use crate::ops::{sobel, sobel_backward};
use crate::real::Real;
use crate::tensor::{check_mask, Tensor};

use super::perceptual::FeatureExtractor;

/// Coefficients of the total loss. The adversarial weight only applies to an
/// externally supplied term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub w_rec: f64,
    pub w_eyeliner: f64,
    pub lambda_per: f64,
    pub lambda_adv: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w_rec: 1.0,
            w_eyeliner: 1.0,
            lambda_per: 0.005,
            lambda_adv: 0.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("w_rec", self.w_rec),
            ("w_eyeliner", self.w_eyeliner),
            ("lambda_per", self.lambda_per),
            ("lambda_adv", self.lambda_adv),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid("loss_weights", alloc::format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Unweighted component values and their weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub rec: f64,
    pub eyeliner: f64,
    pub perceptual: f64,
    pub adversarial: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        [self.total, self.rec, self.eyeliner, self.perceptual, self.adversarial]
            .iter()
            .all(|v| v.is_finite())
    }

    pub(crate) fn accumulate(&mut self, other: &LossBreakdown, k: f64) {
        self.total += k * other.total;
        self.rec += k * other.rec;
        self.eyeliner += k * other.eyeliner;
        self.perceptual += k * other.perceptual;
        self.adversarial += k * other.adversarial;
    }
}

fn same_shape<T: Real>(a: &Tensor<T>, b: &Tensor<T>, op: &'static str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op,
            expected: a.shape(),
            got: b.shape(),
        });
    }
    Ok(())
}

/// Mean absolute error. Subgradient `sign(pred − target) / count`, 0 at ties.
pub fn loss_rec<T: Real>(target: &Tensor<T>, pred: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    same_shape(target, pred, "loss_rec")?;
    let count = pred.len();
    let inv = T::of(1.0 / count as f64);
    let mut grad = Tensor::zeros(pred.shape());
    let mut sum = 0.0;
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p - t;
        sum += d.as_f64().abs();
        *g = if d > T::zero() {
            inv
        } else if d < T::zero() {
            -inv
        } else {
            T::zero()
        };
    }
    Ok((sum / count as f64, grad))
}

/// Masked Sobel loss: mean over all `N·2C·H·W` response elements of
/// `m ⊙ (S(target) − S(pred))²`, the mask broadcast over response channels.
pub fn loss_eyeliner<T: Real>(target: &Tensor<T>, pred: &Tensor<T>, m_eyes: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    same_shape(target, pred, "loss_eyeliner")?;
    check_mask(pred.shape(), m_eyes.shape(), "loss_eyeliner")?;
    if !m_eyes.data().iter().all(|&v| v >= T::zero() && v <= T::one()) {
        return Err(Error::invalid("loss_eyeliner", "mask values must lie in [0, 1]"));
    }
    let (st, sp) = (sobel(target)?, sobel(pred)?);
    let s = sp.shape();
    let count = s.numel();
    let k = T::of(2.0 / count as f64);
    let mut g = Tensor::zeros(s);
    let mut sum = 0.0;
    for n in 0..s.n {
        let m = m_eyes.plane(if m_eyes.shape().n == 1 { 0 } else { n }, 0);
        for c in 0..s.c {
            let (a, b) = (sp.plane(n, c), st.plane(n, c));
            let gp = g.plane_mut(n, c);
            for i in 0..m.len() {
                let d = a[i] - b[i];
                let md = m[i] * d;
                sum += (md * d).as_f64();
                gp[i] = k * md;
            }
        }
    }
    Ok((sum / count as f64, sobel_backward(&g, pred.shape())?))
}

/// Mean squared distance between the extractor features of target and prediction.
pub fn loss_perceptual<T: Real, E: FeatureExtractor<T>>(
    target: &Tensor<T>,
    pred: &Tensor<T>,
    extractor: &E,
) -> Result<(f64, Tensor<T>)> {
    same_shape(target, pred, "loss_perceptual")?;
    let ft = extractor.features(target)?;
    let (fp, trace) = extractor.extract(pred)?;
    let count = fp.len();
    let k = T::of(2.0 / count as f64);
    let mut g = Tensor::zeros(fp.shape());
    let mut sum = 0.0;
    for ((gv, &p), &t) in g.data_mut().iter_mut().zip(fp.data()).zip(ft.data()) {
        let d = p - t;
        sum += (d * d).as_f64();
        *gv = k * d;
    }
    Ok((sum / count as f64, extractor.backward(&trace, &g)?))
}

/// `w_rec·L_rec + w_eyeliner·L_s + λ_per·L_per + λ_adv·L_adv`, where the
/// adversarial term is counted only when supplied.
pub fn total_loss<T: Real, E: FeatureExtractor<T>>(
    target: &Tensor<T>,
    pred: &Tensor<T>,
    m_eyes: &Tensor<T>,
    weights: &LossWeights,
    extractor: &E,
    adversarial: Option<(f64, &Tensor<T>)>,
) -> Result<(LossBreakdown, Tensor<T>)> {
    weights.validate()?;
    let (rec, g_rec) = loss_rec(target, pred)?;
    let (eyeliner, g_eye) = loss_eyeliner(target, pred, m_eyes)?;
    let (perceptual, g_per) = loss_perceptual(target, pred, extractor)?;
    let mut grad = g_rec.scale(T::of(weights.w_rec));
    grad.add_scaled(&g_eye, T::of(weights.w_eyeliner))?;
    grad.add_scaled(&g_per, T::of(weights.lambda_per))?;
    let mut out = LossBreakdown {
        total: weights.w_rec * rec + weights.w_eyeliner * eyeliner + weights.lambda_per * perceptual,
        rec,
        eyeliner,
        perceptual,
        adversarial: 0.0,
    };
    if let Some((value, g_adv)) = adversarial {
        same_shape(pred, g_adv, "total_loss")?;
        grad.add_scaled(g_adv, T::of(weights.lambda_adv))?;
        out.adversarial = value;
        out.total += weights.lambda_adv * value;
    }
    Ok((out, grad))
}

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::config::{NetworkConfig, Stage};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::{Shape, Tensor};

/// A named parameter. `dims` is the logical shape (rank 4 for conv kernels,
/// rank 1 for per-channel vectors); vectors are stored as `1 × C × 1 × 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<T: Real> {
    pub name: String,
    pub dims: Vec<usize>,
    pub value: Tensor<T>,
}

impl<T: Real> Param<T> {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let shape = dims_to_shape(&dims)?;
        Ok(Param {
            name: name.into(),
            dims,
            value: Tensor::from_vec(shape, data)?,
        })
    }

    fn zeros(name: String, dims: Vec<usize>) -> Self {
        let shape = dims_to_shape(&dims).expect("rank 1 or 4");
        Param {
            name,
            dims,
            value: Tensor::zeros(shape),
        }
    }
}

fn dims_to_shape(dims: &[usize]) -> Result<Shape> {
    match *dims {
        [c] => Ok(Shape::new(1, c, 1, 1)),
        [n, c, h, w] => Ok(Shape::new(n, c, h, w)),
        _ => Err(Error::invalid("param", format!("unsupported rank {}", dims.len()))),
    }
}

/// Parameters of the residual network, in topology order: for each conv
/// `<layer>.weight`, `<layer>.bias`, then `<layer>.gamma`, `<layer>.beta` when
/// the layer is normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkWeights<T: Real = f32> {
    config: NetworkConfig,
    params: Vec<Param<T>>,
}

/// Parameter indices of one layer inside [`NetworkWeights::params`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct LayerParams {
    pub weight: usize,
    pub bias: usize,
    pub norm: Option<(usize, usize)>,
}

pub(crate) fn layer_params(config: &NetworkConfig) -> Vec<LayerParams> {
    let mut next = 0;
    config
        .layers()
        .iter()
        .map(|l| {
            let lp = LayerParams {
                weight: next,
                bias: next + 1,
                norm: l.has_norm.then_some((next + 2, next + 3)),
            };
            next += if l.has_norm { 4 } else { 2 };
            lp
        })
        .collect()
}

fn expected_params(config: &NetworkConfig) -> Vec<(String, Vec<usize>)> {
    let mut v = Vec::new();
    for l in config.layers() {
        let c = l.conv;
        v.push((format!("{}.weight", l.name), vec![c.out_channels, c.in_channels, c.kernel_h, c.kernel_w]));
        v.push((format!("{}.bias", l.name), vec![c.out_channels]));
        if l.has_norm {
            v.push((format!("{}.gamma", l.name), vec![c.out_channels]));
            v.push((format!("{}.beta", l.name), vec![c.out_channels]));
        }
    }
    v
}

impl<T: Real> NetworkWeights<T> {
    /// Builds weights from an ordered parameter list, inferring the widths
    /// from the stem, down1 and down2 kernels and checking every name and shape.
    pub fn from_params(params: Vec<Param<T>>) -> Result<Self> {
        let width = |i: usize| params.get(i).and_then(|p| p.dims.first().copied());
        let (Some(c1), Some(c2), Some(c3)) = (width(0), width(4), width(8)) else {
            return Err(Error::invalid("weights", "too few parameters"));
        };
        let config = NetworkConfig::new(c1, c2, c3);
        let expected = expected_params(&config);
        if expected.len() != params.len() {
            return Err(Error::invalid(
                "weights",
                format!("expected {} parameters, found {}", expected.len(), params.len()),
            ));
        }
        for ((name, dims), p) in expected.iter().zip(&params) {
            if *name != p.name || *dims != p.dims {
                return Err(Error::invalid(
                    "weights",
                    format!("expected {name} {dims:?}, found {} {:?}", p.name, p.dims),
                ));
            }
        }
        Ok(NetworkWeights { config, params })
    }

    pub fn zeros(config: &NetworkConfig) -> Self {
        let params = expected_params(config)
            .into_iter()
            .map(|(name, dims)| Param::zeros(name, dims))
            .collect();
        NetworkWeights {
            config: *config,
            params,
        }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    pub fn get(&self, name: &str) -> Option<&Param<T>> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.is_finite())
    }

    pub fn cast<U: Real>(&self) -> NetworkWeights<U> {
        NetworkWeights {
            config: self.config,
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    dims: p.dims.clone(),
                    value: p.value.cast(),
                })
                .collect(),
        }
    }

    #[inline]
    pub(crate) fn tensor(&self, i: usize) -> &Tensor<T> {
        &self.params[i].value
    }
}

/// He-uniform initialization (`U(±√(6/fan_in))`) for every conv except the
/// output conv, which is zeroed so the untrained network predicts an exactly
/// zero residual. Biases and shifts start at 0, scales at 1.
pub fn init_weights(config: &NetworkConfig, seed: u64) -> NetworkWeights<f32> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut w = NetworkWeights::<f32>::zeros(config);
    let layers = config.layers();
    for (l, lp) in layers.iter().zip(layer_params(config)) {
        if l.stage != Stage::Output {
            let fan_in = (l.conv.in_channels * l.conv.kernel_h * l.conv.kernel_w) as f64;
            let bound = (6.0 / fan_in).sqrt();
            for v in w.params[lp.weight].value.data_mut() {
                *v = ((unit_f64(&mut rng) * 2.0 - 1.0) * bound) as f32;
            }
        }
        if let Some((g, _)) = lp.norm {
            for v in w.params[g].value.data_mut() {
                *v = 1.0;
            }
        }
    }
    w
}

/// Uniform in `[0, 1)` with 53 random bits.
pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

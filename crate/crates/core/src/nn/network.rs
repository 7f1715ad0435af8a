use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::layers::{Cache, Layer};

/// An ordered stack of layers with flat per-layer parameters, gradients and
/// momentum buffers.
#[derive(Debug, Clone)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub params: Vec<Vec<f64>>,
    pub grads: Vec<Vec<f64>>,
    pub velocity: Vec<Vec<f64>>,
    caches: Vec<Option<Cache>>,
}

impl Network {
    /// Checks that shapes chain and initializes parameters from `seed`.
    pub fn new(layers: Vec<Layer>, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network has no layers".into()));
        }
        for (idx, pair) in layers.windows(2).enumerate() {
            let (out, inp) = (pair[0].output_shape(), pair[1].input_shape());
            if out != inp {
                return Err(Error::ShapeMismatch(format!(
                    "layer {idx} ({}) emits {}x{}, layer {} ({}) expects {}x{}",
                    pair[0].kind(),
                    out.features,
                    out.width,
                    idx + 1,
                    pair[1].kind(),
                    inp.features,
                    inp.width
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(layers.len());
        for layer in &layers {
            let mut p = vec![0.0; layer.param_count()];
            layer.init(&mut rng, &mut p);
            params.push(p);
        }
        let zeros: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.len()]).collect();
        Ok(Network {
            caches: vec![None; layers.len()],
            grads: zeros.clone(),
            velocity: zeros,
            params,
            layers,
        })
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].input_shape().len()
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().unwrap().output_shape().len()
    }

    /// Learnable scalars per layer.
    pub fn parameter_counts(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::param_count).collect()
    }

    pub fn total_parameters(&self) -> usize {
        self.parameter_counts().iter().sum()
    }

    /// Runs the batch through every layer and keeps what backward needs.
    pub fn forward(&mut self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut act = x.to_owned();
        for (idx, layer) in self.layers.iter().enumerate() {
            let (y, cache) = layer.forward(&self.params[idx], act.view())?;
            if y.iter().any(|v| !v.is_finite()) {
                self.caches.iter_mut().for_each(|c| *c = None);
                return Err(Error::NonFinite { layer: idx });
            }
            self.caches[idx] = Some(cache);
            act = y;
        }
        Ok(act)
    }

    /// Forward pass without retaining caches.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut act = x.to_owned();
        for (idx, layer) in self.layers.iter().enumerate() {
            let (y, _) = layer.forward(&self.params[idx], act.view())?;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: idx });
            }
            act = y;
        }
        Ok(act)
    }

    /// Accumulates parameter gradients from the loss gradient at the output.
    /// Consumes the forward caches.
    pub fn backward(&mut self, grad_out: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut g = grad_out.to_owned();
        for idx in (0..self.layers.len()).rev() {
            let cache = self.caches[idx].take().ok_or(Error::MissingCache)?;
            g = self.layers[idx].backward(&self.params[idx], &cache, g.view(), &mut self.grads[idx])?;
        }
        Ok(g)
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| g.fill(0.0));
    }

    /// Indices of the largest logit per row; ties go to the lowest class.
    pub fn classify(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict(x)?))
    }
}

pub fn argmax_rows(logits: &Array2<f64>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (i, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

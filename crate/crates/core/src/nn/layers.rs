//! Layer kinds and their forward/backward passes.
//!
//! Activations are `batch x (features * width)` matrices, feature-major: the
//! value of feature `i` at node `t` sits in column `i * width + t`.
//! Parameters live in one flat slice per layer, weights first, then one bias
//! per output feature map when biases are enabled.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralBasis, SplineKernel};

/// Feature maps times nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub features: usize,
    pub width: usize,
}

impl Shape {
    pub fn new(features: usize, width: usize) -> Self {
        Shape { features, width }
    }

    pub fn len(&self) -> usize {
        self.features * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense layer over the flattened input; output has one feature map.
#[derive(Debug, Clone)]
pub struct Fc {
    pub input: Shape,
    pub outputs: usize,
    pub bias: bool,
}

/// Locally connected layer: output node `t` sees input nodes `fields[t]`
/// with an unshared `f_in x f_out` weight block per (t, s) pair.
#[derive(Debug, Clone)]
pub struct Lrf {
    pub width: usize,
    pub f_in: usize,
    pub f_out: usize,
    pub fields: Vec<Vec<usize>>,
    pub bias: bool,
}

/// Per-cluster maximum, feature map by feature map.
#[derive(Debug, Clone)]
pub struct MaxPool {
    pub features: usize,
    pub width_in: usize,
    pub clusters: Vec<Vec<usize>>,
}

/// `y_j = V sum_i diag(m_ij) V^T x_i (+ b_j)`. With a kernel the learned
/// coefficients are `alpha_ij` and `m_ij = K alpha_ij`.
#[derive(Debug, Clone)]
pub struct Spectral {
    pub f_in: usize,
    pub f_out: usize,
    pub basis: Arc<SpectralBasis>,
    pub kernel: Option<Arc<SplineKernel>>,
    pub bias: bool,
}

#[derive(Debug, Clone)]
pub struct Relu {
    pub shape: Shape,
}

#[derive(Debug, Clone)]
pub enum Layer {
    Fc(Fc),
    Lrf(Lrf),
    MaxPool(MaxPool),
    Spectral(Spectral),
    Relu(Relu),
}

/// What a layer keeps from its forward pass.
#[derive(Debug, Clone)]
pub enum Cache {
    Input(Array2<f64>),
    Pool { argmax: Vec<usize>, batch: usize },
    Spectral { coeffs: Array2<f64> },
}

impl Lrf {
    fn offsets(&self) -> Vec<usize> {
        let block = self.f_in * self.f_out;
        let mut off = Vec::with_capacity(self.width + 1);
        let mut acc = 0;
        for f in &self.fields {
            off.push(acc);
            acc += f.len() * block;
        }
        off.push(acc);
        off
    }

    pub fn weight_count(&self) -> usize {
        self.fields.iter().map(Vec::len).sum::<usize>() * self.f_in * self.f_out
    }
}

impl Spectral {
    pub fn width(&self) -> usize {
        self.basis.n()
    }

    pub fn d(&self) -> usize {
        self.basis.d()
    }

    /// Learned coefficients per (i, j) pair: `q` with a kernel, else `d`.
    pub fn coeffs_per_filter(&self) -> usize {
        self.kernel.as_ref().map_or(self.d(), |k| k.q)
    }

    /// Multipliers as an `(f_in * f_out) x d` matrix, row `i * f_out + j`.
    pub fn multipliers(&self, params: &[f64]) -> Array2<f64> {
        let rows = self.f_in * self.f_out;
        let c = self.coeffs_per_filter();
        let a = ArrayView2::from_shape((rows, c), &params[..rows * c]).expect("param layout");
        match &self.kernel {
            Some(k) => a.dot(&k.k.t()),
            None => a.to_owned(),
        }
    }
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Fc(_) => "FC",
            Layer::Lrf(_) => "LRF",
            Layer::MaxPool(_) => "MP",
            Layer::Spectral(s) if s.kernel.is_some() => "SSP",
            Layer::Spectral(_) => "SP",
            Layer::Relu(_) => "ReLU",
        }
    }

    pub fn input_shape(&self) -> Shape {
        match self {
            Layer::Fc(l) => l.input,
            Layer::Lrf(l) => Shape::new(l.f_in, l.width),
            Layer::MaxPool(l) => Shape::new(l.features, l.width_in),
            Layer::Spectral(l) => Shape::new(l.f_in, l.width()),
            Layer::Relu(l) => l.shape,
        }
    }

    pub fn output_shape(&self) -> Shape {
        match self {
            Layer::Fc(l) => Shape::new(1, l.outputs),
            Layer::Lrf(l) => Shape::new(l.f_out, l.width),
            Layer::MaxPool(l) => Shape::new(l.features, l.clusters.len()),
            Layer::Spectral(l) => Shape::new(l.f_out, l.width()),
            Layer::Relu(l) => l.shape,
        }
    }

    fn bias_count(&self) -> usize {
        match self {
            Layer::Fc(l) if l.bias => l.outputs,
            Layer::Lrf(l) if l.bias => l.f_out,
            Layer::Spectral(l) if l.bias => l.f_out,
            _ => 0,
        }
    }

    pub fn weight_count(&self) -> usize {
        match self {
            Layer::Fc(l) => l.input.len() * l.outputs,
            Layer::Lrf(l) => l.weight_count(),
            Layer::Spectral(l) => l.f_in * l.f_out * l.coeffs_per_filter(),
            Layer::MaxPool(_) | Layer::Relu(_) => 0,
        }
    }

    /// Learnable scalars, biases included.
    pub fn param_count(&self) -> usize {
        self.weight_count() + self.bias_count()
    }

    /// Uniform weights in `+-sqrt(1 / fan_in)`, zero biases.
    pub fn init<R: Rng>(&self, rng: &mut R, params: &mut [f64]) {
        params.fill(0.0);
        let mut fill = |slice: &mut [f64], fan_in: usize| {
            let a = (1.0 / fan_in.max(1) as f64).sqrt();
            for p in slice {
                *p = rng.random_range(-a..=a);
            }
        };
        match self {
            Layer::Fc(l) => fill(&mut params[..self.weight_count()], l.input.len()),
            Layer::Lrf(l) => {
                let off = l.offsets();
                for (t, f) in l.fields.iter().enumerate() {
                    fill(&mut params[off[t]..off[t + 1]], f.len() * l.f_in);
                }
            }
            Layer::Spectral(l) => fill(&mut params[..self.weight_count()], l.f_in),
            Layer::MaxPool(_) | Layer::Relu(_) => {}
        }
    }

    pub fn forward(&self, params: &[f64], x: ArrayView2<f64>) -> Result<(Array2<f64>, Cache)> {
        let expected = self.input_shape().len();
        if x.ncols() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} layer expects {expected} inputs per sample, got {}",
                self.kind(),
                x.ncols()
            )));
        }
        let batch = x.nrows();
        match self {
            Layer::Fc(l) => {
                let w = ArrayView2::from_shape((l.outputs, l.input.len()), &params[..self.weight_count()])
                    .expect("param layout");
                let mut y = x.dot(&w.t());
                if l.bias {
                    let b = &params[self.weight_count()..];
                    for mut row in y.rows_mut() {
                        row.iter_mut().zip(b).for_each(|(v, b)| *v += b);
                    }
                }
                Ok((y, Cache::Input(x.to_owned())))
            }
            Layer::Lrf(l) => {
                let w = l.width;
                let xt = x.t().as_standard_layout().into_owned();
                let xs = xt.as_slice().expect("standard layout");
                let mut yt = Array2::<f64>::zeros((l.f_out * w, batch));
                let ys = yt.as_slice_mut().expect("standard layout");
                let off = l.offsets();
                for (t, field) in l.fields.iter().enumerate() {
                    let mut p = off[t];
                    for &s in field {
                        for i in 0..l.f_in {
                            let xrow = &xs[(i * w + s) * batch..(i * w + s + 1) * batch];
                            for j in 0..l.f_out {
                                let wv = params[p];
                                p += 1;
                                let yrow = &mut ys[(j * w + t) * batch..(j * w + t + 1) * batch];
                                yrow.iter_mut().zip(xrow).for_each(|(y, x)| *y += wv * x);
                            }
                        }
                    }
                }
                let mut y = yt.t().as_standard_layout().into_owned();
                if l.bias {
                    add_feature_bias(&mut y, &params[self.weight_count()..], w);
                }
                Ok((y, Cache::Input(xt)))
            }
            Layer::MaxPool(l) => {
                let out = self.output_shape();
                let mut y = Array2::zeros((batch, out.len()));
                let mut argmax = Vec::with_capacity(batch * out.len());
                for (xr, mut yr) in x.rows().into_iter().zip(y.rows_mut()) {
                    for f in 0..l.features {
                        for (c, members) in l.clusters.iter().enumerate() {
                            let mut best = members[0];
                            for &m in &members[1..] {
                                if xr[f * l.width_in + m] > xr[f * l.width_in + best] {
                                    best = m;
                                }
                            }
                            yr[f * out.width + c] = xr[f * l.width_in + best];
                            argmax.push(f * l.width_in + best);
                        }
                    }
                }
                Ok((y, Cache::Pool { argmax, batch }))
            }
            Layer::Spectral(l) => {
                let (n, d) = (l.width(), l.d());
                let v = &l.basis.v;
                let xr = x.as_standard_layout();
                let xr = xr.view().into_shape_with_order((batch * l.f_in, n)).expect("contiguous");
                let coeffs = xr.dot(v);
                let m = l.multipliers(params);
                let mut z = Array2::<f64>::zeros((batch * l.f_out, d));
                for b in 0..batch {
                    for i in 0..l.f_in {
                        let c = coeffs.row(b * l.f_in + i);
                        for j in 0..l.f_out {
                            let mij = m.row(i * l.f_out + j);
                            let mut zr = z.row_mut(b * l.f_out + j);
                            for k in 0..d {
                                zr[k] += c[k] * mij[k];
                            }
                        }
                    }
                }
                let y = z.dot(&v.t());
                let mut y = y.into_shape_with_order((batch, l.f_out * n)).expect("contiguous");
                if l.bias {
                    add_feature_bias(&mut y, &params[self.weight_count()..], n);
                }
                Ok((y, Cache::Spectral { coeffs }))
            }
            Layer::Relu(_) => Ok((x.mapv(|v| v.max(0.0)), Cache::Input(x.to_owned()))),
        }
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the layer input.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &Cache,
        dy: ArrayView2<f64>,
        grads: &mut [f64],
    ) -> Result<Array2<f64>> {
        let batch = dy.nrows();
        match (self, cache) {
            (Layer::Fc(l), Cache::Input(x)) => {
                let nw = self.weight_count();
                let w = ArrayView2::from_shape((l.outputs, l.input.len()), &params[..nw])
                    .expect("param layout");
                let gw = dy.t().dot(x);
                grads[..nw]
                    .iter_mut()
                    .zip(gw.iter())
                    .for_each(|(g, v)| *g += v);
                if l.bias {
                    for (g, s) in grads[nw..].iter_mut().zip(dy.sum_axis(Axis(0)).iter()) {
                        *g += s;
                    }
                }
                Ok(dy.dot(&w))
            }
            (Layer::Lrf(l), Cache::Input(xt)) => {
                let w = l.width;
                let xs = xt.as_slice().expect("standard layout");
                let dyt = dy.t().as_standard_layout().into_owned();
                let ds = dyt.as_slice().expect("standard layout");
                let mut dxt = Array2::<f64>::zeros((l.f_in * w, batch));
                let dxs = dxt.as_slice_mut().expect("standard layout");
                let off = l.offsets();
                for (t, field) in l.fields.iter().enumerate() {
                    let mut p = off[t];
                    for &s in field {
                        for i in 0..l.f_in {
                            let xrow = &xs[(i * w + s) * batch..(i * w + s + 1) * batch];
                            for j in 0..l.f_out {
                                let drow = &ds[(j * w + t) * batch..(j * w + t + 1) * batch];
                                grads[p] += dot(drow, xrow);
                                let wv = params[p];
                                p += 1;
                                let dxrow = &mut dxs[(i * w + s) * batch..(i * w + s + 1) * batch];
                                dxrow.iter_mut().zip(drow).for_each(|(g, d)| *g += wv * d);
                            }
                        }
                    }
                }
                if l.bias {
                    accumulate_feature_bias(&mut grads[self.weight_count()..], dy, w);
                }
                Ok(dxt.t().as_standard_layout().into_owned())
            }
            (Layer::MaxPool(_), Cache::Pool { argmax, batch: b }) => {
                if *b != batch {
                    return Err(Error::ShapeMismatch("pool gradient batch size".into()));
                }
                let per = self.output_shape().len();
                let mut dx = Array2::zeros((batch, self.input_shape().len()));
                for (r, (dyr, mut dxr)) in dy.rows().into_iter().zip(dx.rows_mut()).enumerate() {
                    for (o, &g) in dyr.iter().enumerate() {
                        dxr[argmax[r * per + o]] += g;
                    }
                }
                Ok(dx)
            }
            (Layer::Spectral(l), Cache::Spectral { coeffs }) => {
                let (n, d) = (l.width(), l.d());
                let v = &l.basis.v;
                let dys = dy.as_standard_layout();
                let dyr = dys.view().into_shape_with_order((batch * l.f_out, n)).expect("contiguous");
                let g = dyr.dot(v);
                let m = l.multipliers(params);
                let mut dm = Array2::<f64>::zeros((l.f_in * l.f_out, d));
                let mut dc = Array2::<f64>::zeros((batch * l.f_in, d));
                for b in 0..batch {
                    for i in 0..l.f_in {
                        let c = coeffs.row(b * l.f_in + i);
                        for j in 0..l.f_out {
                            let gr = g.row(b * l.f_out + j);
                            let mij = m.row(i * l.f_out + j);
                            {
                                let mut dmr = dm.row_mut(i * l.f_out + j);
                                for k in 0..d {
                                    dmr[k] += c[k] * gr[k];
                                }
                            }
                            let mut dcr = dc.row_mut(b * l.f_in + i);
                            for k in 0..d {
                                dcr[k] += mij[k] * gr[k];
                            }
                        }
                    }
                }
                let da = match &l.kernel {
                    Some(k) => dm.dot(&k.k),
                    None => dm,
                };
                let nw = self.weight_count();
                grads[..nw].iter_mut().zip(da.iter()).for_each(|(g, v)| *g += v);
                if l.bias {
                    accumulate_feature_bias(&mut grads[nw..], dy, n);
                }
                let dx = dc.dot(&v.t());
                Ok(dx.into_shape_with_order((batch, l.f_in * n)).expect("contiguous"))
            }
            (Layer::Relu(_), Cache::Input(x)) => {
                let mut dx = dy.to_owned();
                dx.zip_mut_with(x, |g, &xv| {
                    if xv <= 0.0 {
                        *g = 0.0;
                    }
                });
                Ok(dx)
            }
            _ => Err(Error::MissingCache),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_feature_bias(y: &mut Array2<f64>, bias: &[f64], width: usize) {
    for mut row in y.rows_mut() {
        for (j, &b) in bias.iter().enumerate() {
            row.slice_mut(ndarray::s![j * width..(j + 1) * width])
                .mapv_inplace(|v| v + b);
        }
    }
}

fn accumulate_feature_bias(grads: &mut [f64], dy: ArrayView2<f64>, width: usize) {
    for row in dy.rows() {
        for (j, g) in grads.iter_mut().enumerate() {
            *g += row.slice(ndarray::s![j * width..(j + 1) * width]).sum();
        }
    }
}

//! Turns a parsed architecture into layers over a concrete graph.
//!
//! Sizes are nominal `features * nodes` counts. On a level of nominal width
//! `w`, `LRF N` and `SP N` emit `N / w` feature maps. `MP N` with `f` feature
//! maps asks for `N / f` clusters, which becomes the next nominal width, and
//! pools onto the coarsening scale whose size is nearest, recording any
//! substitution. Layers are built on the actual scale sizes.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use ndarray::Array2;

use crate::coarsening::{build_hierarchy_until, ClusterHierarchy};
use crate::error::{Error, Result};
use crate::graph::{LaplacianKind, WeightedGraph};
use crate::harness::arch::{Architecture, LayerKind};
use crate::nn::{Fc, Layer, Lrf, MaxPool, Relu, Shape, Spectral};
use crate::spectral::{cached_basis, spline_kernel, SpectralBasis};

#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Spectral cutoff; `None` keeps every eigenvector.
    pub spectral_d: Option<usize>,
    /// Spline coefficients per smooth spectral filter.
    pub spectral_q: usize,
    pub laplacian: LaplacianKind,
    pub epsilon: f64,
    pub bias: bool,
    pub basis_cache: Option<PathBuf>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            spectral_d: None,
            spectral_q: 32,
            laplacian: LaplacianKind::Combinatorial,
            epsilon: crate::coarsening::DEFAULT_EPSILON,
            bias: true,
            basis_cache: None,
        }
    }
}

/// Lazily built hierarchy and eigenbases for one input graph.
pub struct GraphContext<'a> {
    pub graph: &'a WeightedGraph,
    pub options: BuildOptions,
    hierarchy: Option<ClusterHierarchy>,
    level_graphs: HashMap<usize, WeightedGraph>,
    bases: HashMap<(usize, usize), Arc<SpectralBasis>>,
}

pub struct BuiltNetwork {
    pub layers: Vec<Layer>,
    /// Notes on MP sizes that could not be matched exactly.
    pub substitutions: Vec<String>,
}

impl<'a> GraphContext<'a> {
    pub fn new(graph: &'a WeightedGraph, options: BuildOptions) -> Self {
        GraphContext {
            graph,
            options,
            hierarchy: None,
            level_graphs: HashMap::new(),
            bases: HashMap::new(),
        }
    }

    pub fn hierarchy(&mut self) -> Result<&ClusterHierarchy> {
        if self.hierarchy.is_none() {
            self.hierarchy = Some(build_hierarchy_until(self.graph, 1, self.options.epsilon)?);
        }
        Ok(self.hierarchy.as_ref().unwrap())
    }

    fn level_width(&mut self, level: usize) -> Result<usize> {
        if level == 0 {
            return Ok(self.graph.n());
        }
        Ok(self.hierarchy()?.sizes[level])
    }

    /// Receptive fields at `level`: the support of `W_k` plus the node itself.
    pub fn fields(&mut self, level: usize) -> Result<Vec<Vec<usize>>> {
        let supports = self.hierarchy()?.supports(level);
        Ok(supports
            .into_iter()
            .enumerate()
            .map(|(t, mut f)| {
                if let Err(p) = f.binary_search(&t) {
                    f.insert(p, t);
                }
                f
            })
            .collect())
    }

    /// Graph of a coarse level: symmetrized aggregate weights, zero diagonal.
    fn level_graph(&mut self, level: usize) -> Result<WeightedGraph> {
        if let Some(g) = self.level_graphs.get(&level) {
            return Ok(g.clone());
        }
        let a = self.hierarchy()?.aggregates[level].to_dense();
        let n = a.nrows();
        let w = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                0.0
            } else {
                (a[[i, j]] + a[[j, i]]) / 2.0
            }
        });
        let g = WeightedGraph::from_weights(w)?;
        self.level_graphs.insert(level, g.clone());
        Ok(g)
    }

    pub fn basis(&mut self, level: usize, d: usize) -> Result<Arc<SpectralBasis>> {
        if let Some(b) = self.bases.get(&(level, d)) {
            return Ok(b.clone());
        }
        let kind = self.options.laplacian;
        let cache = self.options.basis_cache.clone();
        let b = if level == 0 {
            cached_basis(self.graph, kind, d, cache.as_deref())?
        } else {
            let g = self.level_graph(level)?;
            cached_basis(&g, kind, d, cache.as_deref())?
        };
        let b = Arc::new(b);
        self.bases.insert((level, d), b.clone());
        Ok(b)
    }

    pub fn build(&mut self, arch: &Architecture) -> Result<BuiltNetwork> {
        let n = self.graph.n();
        if arch.input != n {
            return Err(Error::WidthMismatch(format!(
                "architecture starts at width {} but the graph has {n} nodes",
                arch.input
            )));
        }
        let bias = self.options.bias;
        let mut layers = Vec::new();
        let mut substitutions = Vec::new();
        let mut shape = Shape::new(1, n);
        let mut nominal = n;
        // Graph level of the current activations; `None` once flattened by FC.
        let mut level = Some(0usize);

        for (pos, tok) in arch.layers.iter().enumerate() {
            let label = format!("{}{}", tok.kind.token(), tok.size);
            let on_graph = |level: Option<usize>| {
                level.ok_or_else(|| {
                    Error::WidthMismatch(format!("{label} (layer {}) needs graph-structured input, not FC output", pos + 1))
                })
            };
            match tok.kind {
                LayerKind::Fc => {
                    layers.push(Layer::Fc(Fc { input: shape, outputs: tok.size, bias }));
                    shape = Shape::new(1, tok.size);
                    layers.push(Layer::Relu(Relu { shape }));
                    level = None;
                }
                LayerKind::Lrf | LayerKind::Sp | LayerKind::Ssp => {
                    let lv = on_graph(level)?;
                    let w = shape.width;
                    if tok.size % nominal != 0 {
                        return Err(Error::WidthMismatch(format!(
                            "{label}: size is not a multiple of the current width {nominal}"
                        )));
                    }
                    let f_out = tok.size / nominal;
                    if tok.kind == LayerKind::Lrf {
                        let fields = self.fields(lv)?;
                        layers.push(Layer::Lrf(Lrf { width: w, f_in: shape.features, f_out, fields, bias }));
                    } else {
                        let d = self.options.spectral_d.unwrap_or(w).min(w);
                        let basis = self.basis(lv, d)?;
                        let kernel = if tok.kind == LayerKind::Ssp {
                            let q = self.options.spectral_q.min(d);
                            Some(Arc::new(spline_kernel(d, q)?))
                        } else {
                            None
                        };
                        layers.push(Layer::Spectral(Spectral { f_in: shape.features, f_out, basis, kernel, bias }));
                    }
                    shape = Shape::new(f_out, w);
                    layers.push(Layer::Relu(Relu { shape }));
                }
                LayerKind::Mp => {
                    let lv = on_graph(level)?;
                    let f = shape.features;
                    if tok.size % f != 0 {
                        return Err(Error::WidthMismatch(format!(
                            "{label}: size is not a multiple of the {f} feature maps"
                        )));
                    }
                    let want = tok.size / f;
                    let h = self.hierarchy()?;
                    let best = (lv + 1..h.sizes.len())
                        .min_by_key(|&k| (h.sizes[k].abs_diff(want), k))
                        .ok_or_else(|| {
                            Error::WidthMismatch(format!("{label}: no coarser scale below level {lv}"))
                        })?;
                    let got = h.sizes[best];
                    if got != want {
                        substitutions.push(format!(
                            "{label} (layer {}): {want} clusters requested, scale {best} has {got}",
                            pos + 1
                        ));
                    }
                    let clusters = h.pool_map_between(lv, best);
                    let width_in = self.level_width(lv)?;
                    layers.push(Layer::MaxPool(MaxPool { features: f, width_in, clusters }));
                    shape = Shape::new(f, got);
                    nominal = want;
                    level = Some(best);
                }
            }
        }
        layers.push(Layer::Fc(Fc { input: shape, outputs: arch.classes, bias }));
        Ok(BuiltNetwork { layers, substitutions })
    }
}

/// Convenience wrapper: parse and build in one step.
pub fn parse_architecture(s: &str, ctx: &mut GraphContext) -> Result<BuiltNetwork> {
    ctx.build(&Architecture::parse(s)?)
}

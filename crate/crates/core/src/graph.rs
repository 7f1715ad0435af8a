//! Weighted graphs over a finite node set.
//!
//! A [`WeightedGraph`] owns a dense symmetric, nonnegative weight matrix with a
//! zero diagonal. Construction validates those invariants and rejects graphs
//! with more than one connected component, since everything downstream (the
//! constant null vector of the Laplacian, the coarsening recursion) assumes a
//! single component.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Bandwidth of the Gaussian kernel used by [`build_knn_gaussian`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Mean distance to the k-th nearest neighbor.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianKind {
    /// `D - W`.
    #[default]
    Combinatorial,
    /// `I - D^{-1/2} W D^{-1/2}`.
    Normalized,
}

impl LaplacianKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LaplacianKind::Combinatorial => "combinatorial",
            LaplacianKind::Normalized => "normalized",
        }
    }
}

impl std::str::FromStr for LaplacianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "combinatorial" => Ok(LaplacianKind::Combinatorial),
            "normalized" => Ok(LaplacianKind::Normalized),
            other => Err(Error::Config(format!("unknown laplacian kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Laplacian {
    pub kind: LaplacianKind,
    pub matrix: Array2<f64>,
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Frobenius norm, used to scale residual tolerances.
    pub fn norm(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    weights: Array2<f64>,
    degrees: Vec<f64>,
    coords: Option<Array2<f64>>,
}

impl WeightedGraph {
    /// Validates `weights` and wraps it.
    ///
    /// The matrix must be square, finite, nonnegative, bitwise symmetric, have
    /// a zero diagonal, and describe a single connected component.
    pub fn from_weights(weights: Array2<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || weights.ncols() != n {
            return Err(Error::InvalidGraph(format!(
                "expected a nonempty square matrix, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        for i in 0..n {
            if weights[[i, i]] != 0.0 {
                return Err(Error::InvalidGraph(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let w = weights[[i, j]];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!("bad weight {w} at ({i}, {j})")));
                }
                if w.to_bits() != weights[[j, i]].to_bits() {
                    return Err(Error::InvalidGraph(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        let degrees: Vec<f64> = weights.rows().into_iter().map(|r| r.sum()).collect();
        let components = count_components(&weights);
        if components != 1 {
            return Err(Error::DisconnectedGraph { components });
        }
        Ok(Self {
            weights,
            degrees,
            coords: None,
        })
    }

    pub fn with_coords(mut self, coords: Array2<f64>) -> Result<Self> {
        if coords.nrows() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} coordinates for {} nodes",
                coords.nrows(),
                self.n()
            )));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn coords(&self) -> Option<&Array2<f64>> {
        self.coords.as_ref()
    }

    pub fn laplacian(&self, kind: LaplacianKind) -> Laplacian {
        let n = self.n();
        let w = &self.weights;
        let matrix = match kind {
            LaplacianKind::Combinatorial => Array2::from_shape_fn((n, n), |(i, j)| {
                if i == j {
                    self.degrees[i]
                } else {
                    -w[[i, j]]
                }
            }),
            LaplacianKind::Normalized => {
                let s: Vec<f64> = self.degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
                Array2::from_shape_fn((n, n), |(i, j)| {
                    if i == j {
                        1.0
                    } else {
                        -w[[i, j]] * (s[i] * s[j])
                    }
                })
            }
        };
        Laplacian { kind, matrix }
    }

    /// `sum_i sum_j W_ij (x_i - x_j)^2`, each unordered pair counted twice.
    pub fn smoothness(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n(), "signal length must match node count");
        let mut total = 0.0;
        for (i, row) in self.weights.rows().into_iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    let diff = x[i] - x[j];
                    total += w * diff * diff;
                }
            }
        }
        total
    }

    /// Threshold neighborhoods `N(j) = { i : W_ij > delta }`.
    pub fn neighborhoods(&self, delta: f64) -> Vec<Vec<usize>> {
        self.weights
            .columns()
            .into_iter()
            .map(|col| {
                col.iter()
                    .enumerate()
                    .filter(|(_, &w)| w > delta)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect()
    }

    /// Sparse adjacency lists (nonzero weights).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        self.neighborhoods(0.0)
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.n() as f64
    }

    /// Hex SHA-256 of the node count and the weight bits.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n() as u64).to_le_bytes());
        for w in self.weights.iter() {
            hasher.update(w.to_bits().to_le_bytes());
        }
        hasher
            .finalize()
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    /// Flat text form: the node count on the first line, then one `i j w`
    /// triplet per nonzero entry in row-major order, with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n());
        for ((i, j), &w) in self.weights.indexed_iter() {
            if w != 0.0 {
                let _ = writeln!(out, "{i} {j} {w:.16e}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |detail: String| Error::InvalidGraph(detail);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| bad("empty graph file".into()))?
            .trim()
            .parse()
            .map_err(|e| bad(format!("node count: {e}")))?;
        let mut weights = Array2::zeros((n, n));
        for (lineno, line) in lines.enumerate() {
            let mut parts = line.split_whitespace();
            let mut field = |name: &str| {
                parts
                    .next()
                    .ok_or_else(|| bad(format!("line {}: missing {name}", lineno + 2)))
            };
            let i: usize = field("row")?.parse().map_err(|e| bad(format!("row: {e}")))?;
            let j: usize = field("col")?.parse().map_err(|e| bad(format!("col: {e}")))?;
            let w: f64 = field("weight")?
                .parse()
                .map_err(|e| bad(format!("weight: {e}")))?;
            if i >= n || j >= n {
                return Err(bad(format!("index ({i}, {j}) out of range")));
            }
            weights[[i, j]] = w;
        }
        Self::from_weights(weights)
    }

    pub fn save_text(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load_text(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

pub(crate) fn count_components(weights: &Array2<f64>) -> usize {
    let n = weights.nrows();
    let mut uf = UnionFind::new(n);
    let mut components = n;
    for ((i, j), &w) in weights.indexed_iter() {
        if j > i && w > 0.0 && uf.union(i, j) {
            components -= 1;
        }
    }
    components
}

fn squared_distance(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Gaussian-kernel k-nearest-neighbor graph over a point cloud.
///
/// `W_ij = exp(-|p_i - p_j|^2 / sigma^2)` when `j` is among the `k` nearest
/// neighbors of `i` or vice versa. Distance ties are broken by index.
pub fn build_knn_gaussian(
    points: ArrayView2<f64>,
    k: usize,
    sigma: Bandwidth,
) -> Result<WeightedGraph> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 points, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(Error::Config(format!("k = {k} must be in [1, {n})")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("points must be finite".into()));
    }

    let mut neighbors: Vec<Vec<(f64, usize)>> = Vec::with_capacity(n);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        candidates.clear();
        let pi = points.row(i);
        candidates.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(pi, points.row(j)), j)),
        );
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        candidates.select_nth_unstable_by(k - 1, cmp);
        let mut nearest = candidates[..k].to_vec();
        nearest.sort_unstable_by(cmp);
        let coincident = nearest.iter().filter(|(d, _)| *d == 0.0).count();
        if coincident == k {
            return Err(Error::DuplicatePoints {
                index: i,
                coincident,
                k,
            });
        }
        neighbors.push(nearest);
    }

    let sigma = match sigma {
        Bandwidth::Fixed(s) if s > 0.0 && s.is_finite() => s,
        Bandwidth::Fixed(s) => return Err(Error::Config(format!("bandwidth {s} must be positive"))),
        Bandwidth::Auto => {
            // Summing sorted values keeps the result independent of point order.
            let mut kth: Vec<f64> = neighbors.iter().map(|nb| nb[k - 1].0.sqrt()).collect();
            kth.sort_unstable_by(f64::total_cmp);
            kth.iter().sum::<f64>() / n as f64
        }
    };
    let inv_s2 = 1.0 / (sigma * sigma);

    let mut weights = Array2::zeros((n, n));
    for (i, nearest) in neighbors.iter().enumerate() {
        for &(d2, j) in nearest {
            let w = (-d2 * inv_s2).exp();
            weights[[i, j]] = w;
            weights[[j, i]] = w;
        }
    }
    WeightedGraph::from_weights(weights)?.with_coords(points.to_owned())
}

/// Absolute empirical covariance between coordinates, as similarity weights.
///
/// `signals` is `samples x n`. Entries below `1e-12` times the largest weight
/// are clamped to zero.
pub fn build_covariance_graph(signals: ArrayView2<f64>) -> Result<WeightedGraph> {
    let (samples, n) = signals.dim();
    if samples < 2 {
        return Err(Error::Config(format!("need at least 2 samples, got {samples}")));
    }
    for (j, col) in signals.columns().into_iter().enumerate() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(Error::DegenerateData { index: j });
        }
    }
    let mean = signals.mean_axis(ndarray::Axis(0)).expect("nonempty");
    let centered = &signals - &mean;
    let cov = centered.t().dot(&centered) / (samples as f64 - 1.0);

    let mut weights = Array2::zeros((n, n));
    let mut max = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = cov[[i, j]].abs();
            weights[[i, j]] = w;
            weights[[j, i]] = w;
            max = max.max(w);
        }
    }
    let floor = 1e-12 * max;
    weights.mapv_inplace(|w| if w < floor { 0.0 } else { w });
    WeightedGraph::from_weights(weights)
}

/// Pixel-center coordinates `(row, col)` of a `rows x cols` grid, row-major.
pub fn grid_points(rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows * cols, 2), |(p, c)| {
        if c == 0 {
            (p / cols) as f64
        } else {
            (p % cols) as f64
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn pair() -> WeightedGraph {
        WeightedGraph::from_weights(array![[0.0, 1.0], [1.0, 0.0]]).unwrap()
    }

    fn path3(a: f64, b: f64) -> WeightedGraph {
        WeightedGraph::from_weights(array![[0.0, a, 0.0], [a, 0.0, b], [0.0, b, 0.0]]).unwrap()
    }

    #[test]
    fn two_points_at_bandwidth_distance() {
        let d = 1.7;
        let pts = array![[0.0, 0.0], [d, 0.0]];
        let g = build_knn_gaussian(pts.view(), 1, Bandwidth::Fixed(d)).unwrap();
        let e = (-1.0f64).exp();
        assert!((g.weights()[[0, 1]] - e).abs() < 1e-15);
        assert_eq!(g.weights()[[0, 0]], 0.0);
    }

    #[test]
    fn collinear_points_form_a_path() {
        let pts = array![[0.0], [1.0], [2.0]];
        let g = build_knn_gaussian(pts.view(), 1, Bandwidth::Auto).unwrap();
        let adj = g.adjacency();
        assert_eq!(adj[1], vec![0, 2]);
        assert_eq!(adj[0], vec![1]);
        assert_eq!(adj[2], vec![1]);
    }

    #[test]
    fn coincident_points_exhausting_k_are_rejected() {
        let pts = array![[0.0, 0.0], [0.0, 0.0], [3.0, 0.0]];
        let err = build_knn_gaussian(pts.view(), 1, Bandwidth::Auto).unwrap_err();
        assert!(matches!(err, Error::DuplicatePoints { .. }));
    }

    #[test]
    fn far_clusters_are_disconnected() {
        let pts = array![[0.0], [0.1], [100.0], [100.1]];
        let err = build_knn_gaussian(pts.view(), 1, Bandwidth::Auto).unwrap_err();
        assert!(matches!(err, Error::DisconnectedGraph { components: 2 }));
    }

    #[test]
    fn invalid_weight_matrices() {
        assert!(WeightedGraph::from_weights(array![[0.0, 1.0], [0.5, 0.0]]).is_err());
        assert!(WeightedGraph::from_weights(array![[1.0, 1.0], [1.0, 0.0]]).is_err());
        assert!(WeightedGraph::from_weights(array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
    }

    #[test]
    fn laplacians_of_a_single_edge() {
        let g = pair();
        let expected = array![[1.0, -1.0], [-1.0, 1.0]];
        assert_eq!(g.laplacian(LaplacianKind::Combinatorial).matrix, expected);
        assert_eq!(g.laplacian(LaplacianKind::Normalized).matrix, expected);
    }

    #[test]
    fn smoothness_examples() {
        let g = pair();
        assert_eq!(g.smoothness(&[0.0, 1.0]), 2.0);
        let p = path3(0.9, 0.4);
        assert_eq!(p.smoothness(&[3.0, 3.0, 3.0]), 0.0);
    }

    #[test]
    fn threshold_neighborhoods() {
        let g = path3(0.9, 0.4);
        assert_eq!(g.neighborhoods(0.5)[1], vec![0]);
        assert_eq!(g.neighborhoods(0.0)[1], vec![0, 2]);
        assert!(g.neighborhoods(0.9).iter().all(|n| n.is_empty()));
    }

    #[test]
    fn duplicated_coordinate_gets_the_largest_covariance() {
        let signals = array![
            [1.0, 1.0, 0.3, -2.0],
            [2.0, 2.0, -0.1, 0.5],
            [0.5, 0.5, 0.4, 1.0],
            [-1.0, -1.0, 0.2, 0.1],
            [0.0, 0.0, -0.3, -0.7]
        ];
        let g = build_covariance_graph(signals.view()).unwrap();
        let w = g.weights();
        let max = w.iter().cloned().fold(0.0, f64::max);
        assert_eq!(w[[0, 1]], max);
    }

    #[test]
    fn constant_coordinate_is_degenerate() {
        let signals = array![[1.0, 2.0], [1.0, 3.0], [1.0, 5.0]];
        assert!(matches!(
            build_covariance_graph(signals.view()),
            Err(Error::DegenerateData { index: 0 })
        ));
    }

    #[test]
    fn text_form_roundtrips_bitwise() {
        let pts = array![[0.0, 0.1], [0.3, 0.7], [1.1, 0.2], [0.9, 0.95], [0.4, 0.4]];
        let g = build_knn_gaussian(pts.view(), 2, Bandwidth::Auto).unwrap();
        let back = WeightedGraph::from_text(&g.to_text()).unwrap();
        assert_eq!(back.content_hash(), g.content_hash());
    }
}

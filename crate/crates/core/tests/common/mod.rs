#![allow(dead_code)]

use gcnn::graph::{build_knn_gaussian, Bandwidth, WeightedGraph};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected graph: a weighted path plus extra edges with probability
/// `density`, relabelled by a random permutation.
pub fn random_connected(n: usize, density: f64, seed: u64) -> WeightedGraph {
    let mut r = rng(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, r.random_range(0..=i));
    }
    let mut w = Array2::zeros((n, n));
    for i in 1..n {
        let v = r.random_range(0.05..1.0);
        w[[perm[i - 1], perm[i]]] = v;
        w[[perm[i], perm[i - 1]]] = v;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if w[[i, j]] == 0.0 && r.random_bool(density) {
                let v = r.random_range(0.05..1.0);
                w[[i, j]] = v;
                w[[j, i]] = v;
            }
        }
    }
    WeightedGraph::from_weights(w).expect("path keeps the graph connected")
}

/// Gaussian kNN graph over uniform points in the unit square, redrawn until
/// connected.
pub fn random_point_graph(n: usize, k: usize, seed: u64) -> WeightedGraph {
    let mut r = rng(seed);
    loop {
        let pts = Array2::from_shape_fn((n, 2), |_| r.random_range(0.0..1.0));
        if let Ok(g) = build_knn_gaussian(pts.view(), k, Bandwidth::Auto) {
            return g;
        }
    }
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    Array2::from_shape_fn((rows, cols), |_| r.random_range(-1.0..1.0))
}

pub fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

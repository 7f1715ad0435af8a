//! MNIST restricted to a fixed random subset of pixel positions.

use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::mnist::Mnist;
use crate::datasets::{DatasetMeta, GraphDataset};
use crate::error::{Error, Result};
use crate::graph::{build_knn_gaussian, Bandwidth};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleConfig {
    pub n_keep: usize,
    /// Neighbor count for the coordinate graph.
    pub k: usize,
    pub seed: u64,
}

impl Default for SubsampleConfig {
    fn default() -> Self {
        SubsampleConfig { n_keep: 400, k: 8, seed: 0 }
    }
}

/// `n_keep` distinct pixel indices of a `rows x cols` grid, ascending.
pub fn sample_pixels(rows: usize, cols: usize, n_keep: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, rows * cols, n_keep).into_vec();
    idx.sort_unstable();
    idx
}

pub fn make_subsampled(mnist: &Mnist, cfg: &SubsampleConfig) -> Result<GraphDataset> {
    let (rows, cols) = (mnist.train.rows, mnist.train.cols);
    if cfg.n_keep < 2 || cfg.n_keep > rows * cols {
        return Err(Error::Config(format!(
            "n_keep = {} outside 2..={}",
            cfg.n_keep,
            rows * cols
        )));
    }
    let pixels = sample_pixels(rows, cols, cfg.n_keep, cfg.seed);
    let coords = Array2::from_shape_fn((pixels.len(), 2), |(i, a)| {
        if a == 0 {
            (pixels[i] / cols) as f64
        } else {
            (pixels[i] % cols) as f64
        }
    });
    let graph = build_knn_gaussian(coords.view(), cfg.k, Bandwidth::Auto)?;
    Ok(GraphDataset {
        graph,
        train: mnist.train.images.select(Axis(1), &pixels),
        train_labels: mnist.train.labels.clone(),
        test: mnist.test.images.select(Axis(1), &pixels),
        test_labels: mnist.test.labels.clone(),
        classes: 10,
        meta: DatasetMeta {
            generator: "subsampled".into(),
            params: serde_json::to_value(cfg)?,
            train_count: mnist.train.len(),
            test_count: mnist.test.len(),
        },
    })
}

//! End-to-end training runs and their reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{
    make_sphere, make_subsampled, DatasetMeta, GraphDataset, Mnist, SphereConfig, SphereMode, SubsampleConfig,
};
use crate::error::{Error, Result};
use crate::graph::LaplacianKind;
use crate::harness::arch::Architecture;
use crate::harness::build::{BuildOptions, GraphContext};
use crate::nn::checkpoint::{Checkpoint, LayerRecord};
use crate::nn::{argmax_rows, cross_entropy, sgd_step, Network, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Subsampled,
    SphereMild,
    SphereUniform,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Subsampled => "subsampled",
            DatasetKind::SphereMild => "sphere-mild",
            DatasetKind::SphereUniform => "sphere-uniform",
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subsampled" => Ok(DatasetKind::Subsampled),
            "sphere-mild" => Ok(DatasetKind::SphereMild),
            "sphere-uniform" => Ok(DatasetKind::SphereUniform),
            other => Err(Error::Config(format!(
                "unknown dataset {other:?} (expected subsampled, sphere-mild or sphere-uniform)"
            ))),
        }
    }
}

/// Which data to use: the generator, its seed, and optional random subsets
/// of the MNIST splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub dataset: DatasetKind,
    pub seed: u64,
    pub train_count: Option<usize>,
    pub test_count: Option<usize>,
}

impl DataConfig {
    pub fn new(dataset: DatasetKind, seed: u64) -> Self {
        DataConfig { dataset, seed, train_count: None, test_count: None }
    }

    pub fn subsampled_config(&self) -> SubsampleConfig {
        SubsampleConfig { seed: self.seed, ..SubsampleConfig::default() }
    }

    pub fn sphere_config(&self) -> SphereConfig {
        let mode = match self.dataset {
            DatasetKind::SphereUniform => SphereMode::Uniform,
            _ => SphereMode::Mild,
        };
        SphereConfig { mode, seed: self.seed, ..SphereConfig::default() }
    }

    fn meta(&self, mnist_sizes: (usize, usize)) -> Result<DatasetMeta> {
        let params = match self.dataset {
            DatasetKind::Subsampled => serde_json::to_value(self.subsampled_config())?,
            _ => serde_json::to_value(self.sphere_config())?,
        };
        Ok(DatasetMeta {
            generator: self.dataset.name().to_string(),
            params: serde_json::json!({
                "generator": params,
                "train_count": self.train_count,
                "test_count": self.test_count,
            }),
            train_count: mnist_sizes.0,
            test_count: mnist_sizes.1,
        })
    }
}

/// Loads MNIST, draws the requested subsets with the data seed, and
/// generates the dataset, going through the on-disk cache when given.
pub fn prepare_dataset(cfg: &DataConfig, mnist_dir: &Path, cache: Option<&Path>) -> Result<GraphDataset> {
    let mnist = Mnist::load(mnist_dir)?;
    prepare_from(cfg, &mnist, cache)
}

pub fn prepare_from(cfg: &DataConfig, mnist: &Mnist, cache: Option<&Path>) -> Result<GraphDataset> {
    let meta = cfg.meta((mnist.train.len(), mnist.test.len()))?;
    let generate = || -> Result<GraphDataset> {
        let source = match (cfg.train_count, cfg.test_count) {
            (None, None) => mnist.clone(),
            (tr, te) => mnist.sample(tr.unwrap_or(usize::MAX), te.unwrap_or(usize::MAX), cfg.seed),
        };
        let mut ds = match cfg.dataset {
            DatasetKind::Subsampled => make_subsampled(&source, &cfg.subsampled_config())?,
            _ => make_sphere(&source, &cfg.sphere_config())?,
        };
        ds.meta = meta.clone();
        Ok(ds)
    };
    match cache {
        Some(root) => GraphDataset::cached(root, &meta, generate),
        None => generate(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub architecture: String,
    pub spectral_d: Option<usize>,
    pub spectral_q: usize,
    pub laplacian: LaplacianKind,
    pub epsilon: f64,
    pub bias: bool,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn new(data: DataConfig, architecture: &str) -> Self {
        let defaults = BuildOptions::default();
        ExperimentConfig {
            data,
            architecture: architecture.to_string(),
            spectral_d: defaults.spectral_d,
            spectral_q: defaults.spectral_q,
            laplacian: defaults.laplacian,
            epsilon: defaults.epsilon,
            bias: defaults.bias,
            train: TrainConfig::default(),
        }
    }

    pub fn build_options(&self, basis_cache: Option<PathBuf>) -> BuildOptions {
        BuildOptions {
            spectral_d: self.spectral_d,
            spectral_q: self.spectral_q,
            laplacian: self.laplacian,
            epsilon: self.epsilon,
            bias: self.bias,
            basis_cache,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_error: f64,
    pub test_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub architecture: String,
    pub layers: Vec<LayerRecord>,
    pub parameter_counts: Vec<usize>,
    pub total_parameters: usize,
    pub substitutions: Vec<String>,
    pub nodes: usize,
    pub train_examples: usize,
    pub test_examples: usize,
    pub classes: usize,
    pub initial_test_error: f64,
    pub epochs: Vec<EpochMetrics>,
    pub final_test_error: f64,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    /// Per-epoch table with a header row.
    pub fn epochs_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_error,test_error\n");
        for e in &self.epochs {
            let _ = writeln!(out, "{},{},{},{}", e.epoch, e.train_loss, e.train_error, e.test_error);
        }
        out
    }

    /// Everything except the wall clock, for determinism checks.
    pub fn same_metrics(&self, other: &RunReport) -> bool {
        RunReport { wall_clock_seconds: 0.0, ..self.clone() } == RunReport { wall_clock_seconds: 0.0, ..other.clone() }
    }
}

/// Outcome of [`run_experiment`]: the report and the trained network.
pub struct Run {
    pub report: RunReport,
    pub network: Network,
}

pub struct RunPaths {
    /// Where report, epoch table and checkpoint are written.
    pub out: Option<PathBuf>,
    pub basis_cache: Option<PathBuf>,
}

fn rows_f64(x: ArrayView2<f32>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), x.ncols()));
    for (mut dst, &i) in out.rows_mut().into_iter().zip(idx) {
        dst.iter_mut().zip(x.row(i)).for_each(|(d, &s)| *d = s as f64);
    }
    out
}

/// Test error in percent.
pub fn evaluate(net: &Network, x: ArrayView2<f32>, labels: &[u8]) -> Result<f64> {
    let mut wrong = 0;
    for (c, chunk) in x.axis_chunks_iter(Axis(0), 500).enumerate() {
        let idx: Vec<usize> = (0..chunk.nrows()).collect();
        let pred = argmax_rows(&net.predict(rows_f64(chunk, &idx).view())?);
        wrong += pred
            .iter()
            .enumerate()
            .filter(|&(r, &p)| p != labels[c * 500 + r] as usize)
            .count();
    }
    Ok(100.0 * wrong as f64 / labels.len().max(1) as f64)
}

pub fn run_experiment(cfg: &ExperimentConfig, data: &GraphDataset, paths: &RunPaths) -> Result<Run> {
    cfg.train.validate()?;
    let start = Instant::now();
    let arch = Architecture::parse(&cfg.architecture)?;
    if arch.classes != data.classes {
        return Err(Error::WidthMismatch(format!(
            "architecture ends in {} classes, dataset has {}",
            arch.classes, data.classes
        )));
    }
    let mut ctx = GraphContext::new(&data.graph, cfg.build_options(paths.basis_cache.clone()));
    let built = ctx.build(&arch)?;
    let mut net = Network::new(built.layers, cfg.train.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    rng.set_stream(1);

    let initial_test_error = evaluate(&net, data.test.view(), &data.test_labels)?;
    let mut epochs = Vec::with_capacity(cfg.train.epochs);
    let mut order: Vec<usize> = (0..data.train.nrows()).collect();
    for epoch in 1..=cfg.train.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut wrong) = (0.0, 0usize);
        for batch in order.chunks(cfg.train.batch_size) {
            let x = rows_f64(data.train.view(), batch);
            let labels: Vec<usize> = batch.iter().map(|&i| data.train_labels[i] as usize).collect();
            net.zero_grads();
            let logits = net.forward(x.view())?;
            let (loss, grad) = cross_entropy(logits.view(), &labels)?;
            net.backward(grad.view())?;
            sgd_step(&mut net, &cfg.train);
            loss_sum += loss * batch.len() as f64;
            wrong += argmax_rows(&logits).iter().zip(&labels).filter(|(p, y)| p != y).count();
        }
        let n = order.len().max(1) as f64;
        epochs.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / n,
            train_error: 100.0 * wrong as f64 / n,
            test_error: evaluate(&net, data.test.view(), &data.test_labels)?,
        });
    }
    let final_test_error = epochs.last().map_or(initial_test_error, |e| e.test_error);
    let checkpoint = Checkpoint::capture(&net, &arch.to_string(), serde_json::to_value(cfg)?);
    let report = RunReport {
        config: cfg.clone(),
        architecture: arch.to_string(),
        layers: checkpoint.layers.clone(),
        parameter_counts: net.parameter_counts(),
        total_parameters: net.total_parameters(),
        substitutions: built.substitutions,
        nodes: data.n(),
        train_examples: data.train.nrows(),
        test_examples: data.test.nrows(),
        classes: data.classes,
        initial_test_error,
        epochs,
        final_test_error,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    if let Some(out) = &paths.out {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let write = |name: &str, text: String| {
            let p = out.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        write("report.json", serde_json::to_string_pretty(&report)?)?;
        write("epochs.csv", report.epochs_csv())?;
        checkpoint.save(&out.join("checkpoint.json"))?;
    }
    Ok(Run { report, network: net })
}

/// Rebuilds the network a checkpoint was trained as, with its parameters.
pub fn restore_network(
    checkpoint: &Checkpoint,
    data: &GraphDataset,
    basis_cache: Option<PathBuf>,
) -> Result<(ExperimentConfig, Network)> {
    let cfg: ExperimentConfig = serde_json::from_value(checkpoint.config.clone())?;
    let mut ctx = GraphContext::new(&data.graph, cfg.build_options(basis_cache));
    let built = ctx.build(&Architecture::parse(&cfg.architecture)?)?;
    let mut net = Network::new(built.layers, cfg.train.seed)?;
    checkpoint.restore_into(&mut net)?;
    Ok((cfg, net))
}

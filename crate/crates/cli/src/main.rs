use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gcnn::datasets::{default_mnist_dir, nn_baseline};
use gcnn::graph::LaplacianKind;
use gcnn::harness::dump::central_node;
use gcnn::harness::{
    dump_filters, prepare_dataset, restore_network, run_experiment, DataConfig, DatasetKind, ExperimentConfig,
    RunPaths,
};
use gcnn::nn::{Checkpoint, TrainConfig};
use gcnn::Error;

#[derive(Parser)]
#[command(name = "gcnn", version, about = "Convolutional networks on graphs: training runs, baselines and filter dumps")]
struct Cli {
    /// Directory with the four MNIST IDX files.
    #[arg(long, global = true, env = "GCNN_MNIST_DIR")]
    mnist_dir: Option<PathBuf>,
    /// Cache for generated datasets and eigenbases.
    #[arg(long, global = true, env = "GCNN_CACHE_DIR", default_value = ".gcnn-cache")]
    cache_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// subsampled, sphere-mild or sphere-uniform.
    #[arg(long)]
    dataset: String,
    /// Seed of the dataset generator and of the split subsets.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    /// Random subset of the training split (default: all of it).
    #[arg(long)]
    train_count: Option<usize>,
    /// Random subset of the test split (default: all of it).
    #[arg(long)]
    test_count: Option<usize>,
}

impl DataArgs {
    fn config(&self) -> Result<DataConfig, Error> {
        let mut cfg = DataConfig::new(self.dataset.parse::<DatasetKind>()?, self.data_seed);
        cfg.train_count = self.train_count;
        cfg.test_count = self.test_count;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and write report.json, epochs.csv and checkpoint.json.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// Architecture string, e.g. 400-LRF1600-MP800-10.
        #[arg(long)]
        arch: String,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 0.9)]
        momentum: f64,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        /// Seed for initialization and batch order.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Eigenvectors kept by spectral layers (default: all).
        #[arg(long)]
        spectral_d: Option<usize>,
        /// Spline coefficients per smooth spectral filter.
        #[arg(long, default_value_t = 32)]
        spectral_q: usize,
        /// combinatorial or normalized.
        #[arg(long, default_value = "combinatorial")]
        laplacian: String,
        /// Covering threshold of the clustering hierarchy.
        #[arg(long, default_value_t = gcnn::coarsening::DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        no_bias: bool,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// 1-nearest-neighbor test error on a dataset.
    BaselineNn {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Export the learned filters of one layer of a checkpoint.
    DumpFilters {
        #[arg(long)]
        ckpt: PathBuf,
        /// Index into the layer list of the network (ReLU and pooling included).
        #[arg(long)]
        layer: usize,
        /// Nodes to centre filters on (default: the node nearest the centroid).
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<usize>,
        #[arg(long)]
        pgm: bool,
        #[arg(long, default_value = "filters")]
        out: PathBuf,
    },
    /// Generate a dataset into the cache, optionally copying it to a directory.
    MakeDataset {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    let mnist_dir = cli.mnist_dir.clone().unwrap_or_else(default_mnist_dir);
    let data_cache = cli.cache_dir.join("datasets");
    let basis_cache = cli.cache_dir.join("bases");
    match cli.command {
        Command::Train {
            data,
            arch,
            epochs,
            lr,
            momentum,
            batch,
            seed,
            spectral_d,
            spectral_q,
            laplacian,
            epsilon,
            no_bias,
            out,
        } => {
            let mut cfg = ExperimentConfig::new(data.config()?, &arch);
            cfg.train = TrainConfig { learning_rate: lr, momentum, batch_size: batch, epochs, seed };
            cfg.spectral_d = spectral_d;
            cfg.spectral_q = spectral_q;
            cfg.laplacian = laplacian.parse::<LaplacianKind>()?;
            cfg.epsilon = epsilon;
            cfg.bias = !no_bias;
            let ds = prepare_dataset(&cfg.data, &mnist_dir, Some(&data_cache))?;
            let paths = RunPaths { out: Some(out.clone()), basis_cache: Some(basis_cache) };
            let run = run_experiment(&cfg, &ds, &paths)?;
            let r = &run.report;
            for note in &r.substitutions {
                eprintln!("note: {note}");
            }
            eprintln!("epoch 0: test error {:.2}%", r.initial_test_error);
            for e in &r.epochs {
                eprintln!(
                    "epoch {}: loss {:.4}, train error {:.2}%, test error {:.2}%",
                    e.epoch, e.train_loss, e.train_error, e.test_error
                );
            }
            println!(
                "{}",
                serde_json::json!({
                    "architecture": r.architecture,
                    "total_parameters": r.total_parameters,
                    "parameter_counts": r.parameter_counts,
                    "final_test_error": r.final_test_error,
                    "wall_clock_seconds": r.wall_clock_seconds,
                    "out": out,
                })
            );
        }
        Command::BaselineNn { data } => {
            let cfg = data.config()?;
            let ds = prepare_dataset(&cfg, &mnist_dir, Some(&data_cache))?;
            let err = nn_baseline(ds.train.view(), &ds.train_labels, ds.test.view(), &ds.test_labels);
            println!(
                "{}",
                serde_json::json!({
                    "dataset": cfg.dataset.name(),
                    "train": ds.train.nrows(),
                    "test": ds.test.nrows(),
                    "error": err,
                })
            );
        }
        Command::DumpFilters { ckpt, layer, nodes, pgm, out } => {
            let checkpoint = Checkpoint::load(&ckpt)?;
            let cfg: ExperimentConfig = serde_json::from_value(checkpoint.config.clone())?;
            let ds = prepare_dataset(&cfg.data, &mnist_dir, Some(&data_cache))?;
            let (_, net) = restore_network(&checkpoint, &ds, Some(basis_cache))?;
            let coords = ds.graph.coords();
            let targets = if nodes.is_empty() {
                vec![coords.map_or(0, central_node)]
            } else {
                nodes
            };
            let summary = dump_filters(&net, layer, &targets, coords, &out, pgm)?;
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::MakeDataset { data, out } => {
            let cfg = data.config()?;
            let ds = prepare_dataset(&cfg, &mnist_dir, Some(&data_cache))?;
            if let Some(dir) = &out {
                ds.save(dir)?;
            }
            println!(
                "{}",
                serde_json::json!({
                    "dataset": cfg.dataset.name(),
                    "nodes": ds.n(),
                    "edges": ds.graph.edge_count(),
                    "train": ds.train.nrows(),
                    "test": ds.test.nrows(),
                    "classes": ds.classes,
                    "key": ds.meta.cache_key(),
                })
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

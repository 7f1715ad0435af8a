//! Architecture strings, network assembly, training runs and filter dumps.

pub mod arch;
pub mod build;
pub mod dump;
pub mod experiment;

pub use arch::{Architecture, LayerKind, LayerToken};
pub use build::{parse_architecture, BuildOptions, BuiltNetwork, GraphContext};
pub use dump::{dump_filters, filter_views, participation_ratio, DumpSummary, FilterView};
pub use experiment::{
    evaluate, prepare_dataset, prepare_from, restore_network, run_experiment, DataConfig, DatasetKind,
    EpochMetrics, ExperimentConfig, Run, RunPaths, RunReport,
};

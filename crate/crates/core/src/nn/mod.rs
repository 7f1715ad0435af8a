//! Layers, loss, optimizer and checkpoints.

pub mod checkpoint;
pub mod layers;
pub mod loss;
pub mod network;
pub mod sgd;

pub use checkpoint::Checkpoint;
pub use layers::{Cache, Fc, Layer, Lrf, MaxPool, Relu, Shape, Spectral};
pub use loss::cross_entropy;
pub use network::{argmax_rows, Network};
pub use sgd::{sgd_step, TrainConfig};

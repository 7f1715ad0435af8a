//! Convolutional networks on weighted graphs: spatial (locally connected
//! layers over a clustering hierarchy) and spectral (multipliers in the
//! Laplacian eigenbasis) constructions, with MNIST-derived graph datasets
//! and a training harness.

pub mod coarsening;
pub mod datasets;
pub mod error;
pub mod graph;
pub mod harness;
pub mod nn;
pub mod spectral;

pub use error::{Error, Result};

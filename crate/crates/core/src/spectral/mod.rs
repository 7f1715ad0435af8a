//! Laplacian eigenbases, spectral filters and spline kernels.

pub mod basis;
pub mod cache;
pub mod eigen;
pub mod spline;

pub use basis::{eigendecompose, spectral_filter, SpectralBasis};
pub use cache::cached_basis;
pub use spline::{spline_kernel, SplineKernel};

//! Reconstruction of two-dimensional current densities from vector
//! magnetic-field images.
//!
//! - [`grid`]: grids, field containers, metrics
//! - [`forward`]: Biot–Savart sheet operator, its adjoint, noise model
//! - [`wavelet`]: biorthogonal spline families and the divergence-free wavelet transform
//! - [`fourier`]: cosine-taper spectral inversion baseline
//! - [`solver`]: L1-curl regularized inversion by ADMM
//! - [`sim`]: finite-volume ground-truth current simulation
//! - [`io`], [`config`], [`sweep`], [`scenario`]: files, configuration and benchmarks

pub mod config;
pub mod error;
pub mod forward;
pub mod fourier;
pub mod grid;
pub mod io;
pub mod scenario;
pub mod sim;
pub mod solver;
pub mod spectral;
pub mod sweep;
pub mod wavelet;

pub use error::{Error, Result};

//! Numerical toolkit for the perimeter-plus-Yukawa pattern-formation problem.
//!
//! * [`kernels`]: 1-norm Yukawa kernels, sliced kernels, couplings, rescaling.
//! * [`stripes1d`]: one-dimensional stripe energies and profile optimization.
//! * [`geometry`]: periodic rectangle unions, grid sets, slicing, `D_η`.
//! * [`energy_nd`]: d-dimensional energies and their slice decomposition.
//! * [`gamma_limit`]: double-Yukawa functional and its perimeter limit.
//! * [`search`]: candidate ranking, annealing and period scans.

pub mod energy_nd;
pub mod error;
pub mod gamma_limit;
pub mod geometry;
pub mod kernels;
mod lattice;
pub mod optimize;
pub mod quadrature;
pub mod search;
pub mod special;
pub mod stripes1d;

pub use error::{Error, Result};

/// Version of this crate, as recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Phase-field computation of alpha-Cheeger sets and clusters.
//!
//! The densities `u_1, ..., u_k` live on a uniform grid over a box; the
//! penalized Modica-Mortola energy is minimized under the bounds `0 <= u_i <= 1`
//! with a projected L-BFGS method, on a sequence of refined grids. Results are
//! measured by thresholding, checked against exact Cheeger sets of convex
//! polygons, and post-processed into ball packings.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod functional;
pub mod grid;
pub mod klr;
pub mod optimizer;
pub mod packing;
pub mod pipeline;
pub mod render;
mod serde_inf;
pub mod shape;

pub use error::{Error, Result};
pub use functional::{EnergyParams, EnergyValue, SharpMeasurement};
pub use grid::{DomainMask, GridSpec, PhaseSystem, ScalarField};
pub use pipeline::{run, RunConfig, RunResult};
pub use shape::{Domain, Shape};

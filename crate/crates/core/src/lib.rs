//! Interference-driver coordinated beamforming for MIMO ad hoc networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`] generates Nakagami-m MIMO channel matrices whose first and
//!   second moments follow the mean/variance decomposition of the fading
//!   spread, and stacks per-point channels into tall `2M x M` matrices.
//! - [`topology`] holds node geometry, detects overlapping radio ranges and
//!   places the receive points inside each overlap.
//! - [`beamformer`] builds the correlation phase rotator, solves the coupled
//!   interference-driver equations, composes per-neighbour drivers and
//!   computes the power normalization.
//! - [`link`] runs seeded Monte-Carlo packet trials through the received
//!   signal model with BPSK/QPSK and zero-forcing detection.
//! - [`metrics`] covers capacity, the analytic packet-error model and
//!   binomial confidence intervals.
//! - [`experiment`] loads TOML configs, runs the figure sweeps and writes CSV.

// `!(x > 0.0)` is the NaN-rejecting form used for every range check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamformer;
pub mod channel;
mod error;
pub mod experiment;
pub mod link;
pub mod metrics;
pub mod topology;

pub use error::{Error, Result};

use nalgebra::{Complex, DMatrix};

/// Complex double-precision scalar used throughout.
pub type C64 = Complex<f64>;

/// Dynamically sized complex matrix.
pub type CMatrix = DMatrix<C64>;

/// Relative singular-value cutoff used for every rank decision.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

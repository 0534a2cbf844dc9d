//! Gradient-flow regularisation laboratory.
//!
//! `geoflow` trains small overparametrised models by (regularised) gradient
//! flow and measures the parameter-space geometry that decides whether a
//! regulariser biases the flow limit:
//!
//! - [`model`]: analytic two-parameter toys and a μP MLP with exact Jacobians.
//! - [`geometry`]: NTK Gram matrices, spectra, flow-tangent/fibre splits,
//!   the representative map and the metric-gap decomposition.
//! - [`regularisers`]: standard, anchored, static quadratic, arc and
//!   geodesic ridge.
//! - [`flow`]: the integrator, trajectory records, fibre drift and
//!   vanishing-λ limits.
//! - [`energy`]: the horizontal minimum-energy control solver, fibre
//!   geodesics and the geodesic ridge evaluator.
//! - [`gibbs`]: partition functions of the energy-induced Gibbs prior.
//! - [`experiments`]: declarative scenarios that write CSV, SVG and a manifest.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod geometry;
pub mod gibbs;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod regularisers;

pub use error::{GeoflowError, Result};
pub use flow::{integrate, FlowConfig, Integrator, StepRecord, StopReason, TrajectoryRecord};
pub use model::{Activation, Dataset, MlpSpec, Model, Params};
pub use regularisers::{RegState, RegulariserKind, RegulariserSpec};

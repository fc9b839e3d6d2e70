//! Numerical experiments on the lifted heat and wave equations along Ricci flow.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gradientflow;
pub mod grid;
pub mod harness;
pub mod heat;
pub mod lift;
pub mod metrics;
pub mod profile;
pub mod rays;
pub mod table;
pub mod wave;

pub use error::{Error, Result};
pub use grid::{Axis, SpaceTimeField, SpatialGrid};
pub use harness::{emit, fit_rate, run_experiment, Experiment, ExperimentConfig, Format};
pub use metrics::{metric_at, MetricFamily, MetricSample};
pub use profile::Profile;
pub use table::ResultTable;

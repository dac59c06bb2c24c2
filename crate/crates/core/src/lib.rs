//! Snowflaked line metrics and their products.
//!
//! The line `(R, delta)` is Euclidean except on a sequence of intervals
//! `I_n` accumulating at 0, each of which carries a metric that looks like
//! `d^alpha_n` at large scales and like a multiple of `d` at small ones.
//! Products `X_d = (R, delta) x R^(d-1)` inherit Euclidean weak tangents
//! while the `d`-modulus of the curve family crossing `I_n x [0, s_n]`
//! grows without bound.
//!
//! Modules:
//! - [`profile`]: the one-interval profile `phi_{alpha, c}`.
//! - [`line_metric`]: the metric `delta` and its length measure.
//! - [`product_space`]: `X_d`, box continua, the compactified ball metric.
//! - [`tangents`]: rough isometries and pointed Gromov-Hausdorff bounds.
//! - [`dimension`]: covering counts, doubling and Assouad estimates.
//! - [`modulus`]: discrete curve modulus on weighted grids.
//! - [`cli`]: configuration, experiment runner and CSV reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dimension;
pub mod error;
pub mod line_metric;
pub mod modulus;
pub mod product_space;
pub mod profile;
pub mod tangents;

pub use error::{Error, Result};
pub use line_metric::{ConstructionParams, Direction, IntervalLocation, LineMetricSpace};

pub use product_space::{BoxContinuum, ProductPoint, ProductSpace};
pub use profile::SnowflakeProfile;

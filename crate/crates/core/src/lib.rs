//! Deep unfitted Nitsche solver for elliptic interface problems.
//!
//! Two residual networks, one per subdomain, are trained to minimise a
//! Monte-Carlo estimate of a Nitsche energy on an unfitted level-set interface.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod benchmarks;
pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod loss;
pub mod network;
pub mod rng;
pub mod sampling;
pub mod stationarity;
pub mod training;

pub use error::{Error, Result};

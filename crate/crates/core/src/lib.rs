//! Data placement for heterogeneous distributed training: a runtime model,
//! an allocation planner, an accelerated extragradient solver for ridge
//! problems, a timing simulator with noise, and the experiment front-end.

// `!(x > 0.0)` is how NaN gets rejected along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmd;
pub mod config;
pub mod data;
pub mod error;
pub mod model;
pub mod planner;
pub mod roots;
pub mod sim;
pub mod solver;
pub mod svg;

pub use error::{Error, Result};

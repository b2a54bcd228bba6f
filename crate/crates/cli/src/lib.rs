//! Command-line front end for `wassdrl-core`: CSV datasets, JSON models and
//! reports, cross validation, confidence intervals, worst-case
//! distributions and generalization radii.
//!
//! Exit codes: 0 success, 2 usage or IO, 3 solver failure, 4 unsupported
//! configuration. JSON schemas for every document live in `docs/`.

pub mod cli;
pub mod commands;
pub mod dataset;
pub mod error;
pub mod model;
pub mod parse;

pub use crate::cli::{run, Cli};
pub use crate::dataset::load_dataset;
pub use crate::error::CliError;

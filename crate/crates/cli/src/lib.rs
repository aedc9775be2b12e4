//! Command-line pipeline and annotation service for image-space pose
//! evaluation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod render;
pub mod server;

pub use error::{CliError, ErrorCode};

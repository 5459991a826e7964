//! Diffusive molecular communication with enzymes in the propagation
//! environment.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod output;
pub mod physchem;
pub mod simulator;

pub use error::{ConfigError, Error, Result};

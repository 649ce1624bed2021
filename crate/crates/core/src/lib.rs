//! Sparse multi-factor asset pricing.

pub mod cli;
pub mod cluster;
pub mod error;
pub mod fdr;
pub mod gibs;
pub mod lasso;
pub mod linalg;
pub mod model_tests;
pub mod panel;
pub mod regression;
pub mod vol;

pub use error::{Error, Result};

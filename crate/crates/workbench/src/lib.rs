//! Batch CLI and HTTP service around `dqi-core`.

pub mod cli;
pub mod service;
pub mod session;

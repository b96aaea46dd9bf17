//! Command-line front end for `plap-core`: problem files, reports, solution
//! and mesh dumps, and the iteration-count benchmark harness.
//!
//! Exit codes: 0 success, 2 configuration error (including a forcing that
//! makes the energy unbounded below), 3 numerical failure, 4 every benchmark
//! cell timed out.

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;

pub use error::{CliError, Result};

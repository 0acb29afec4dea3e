//! Command-line front end for the `kspin` structure-learning library.
//!
//! The binary `kspin` exposes `generate`, `sample`, `fit`, `experiment`,
//! `genes` and `diag`. The same operations are callable from Rust through the
//! option structs in [`commands`], [`experiment`] and [`genes`].
//!
//! Exit codes: 0 success, 1 invalid input, 2 runtime or numerical failure,
//! 3 I/O failure.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod genes;

pub use cli::{run, Cli};
pub use error::{CliError, CliResult};

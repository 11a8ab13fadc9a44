//! Library surface of the experiment runner; the `entropic-spectra` binary
//! is a thin wrapper over [`config::parse_config`], [`runner::run`] and
//! [`runner::compare`].

pub mod config;
pub mod runner;

/// Guide chapter on the experiment runner, shared verbatim with the mdbook
/// under `book/`; its code blocks run as doctests.
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod guide {}

pub use config::{parse_config, Algorithm, ExperimentConfig, PowerMode, Problem};
pub use runner::{compare, execute, mix64, path_seed, run, CliError, ExperimentResult};

//! File formats, dataset tooling and run configuration for the `bispace`
//! dual-space learning engine. The numerical core lives in `bispace-core`;
//! this crate adds everything that touches the filesystem plus the CLI.

pub mod bank;
pub mod config;
pub mod csvio;
pub mod manifest;
pub mod modelfile;
pub mod peye;

pub use config::{ConfigError, RunConfig, SynthConfig};

/// Process exit codes shared by every subcommand.
pub mod exit_codes {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

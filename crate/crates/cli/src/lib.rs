//! Experiment driver: strict JSON configs, single runs, sweeps, re-analysis
//! and the semigroup check, with byte-stable artifacts.

pub mod analyze;
pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod semigroup;
pub mod sweep;

use std::path::{Path, PathBuf};

pub use error::CliError;

/// `--out` wins over the config's `output_dir`.
pub fn resolve_out(flag: Option<&Path>, configured: Option<&Path>) -> Result<PathBuf, CliError> {
    flag.or(configured)
        .map(Path::to_path_buf)
        .ok_or_else(|| CliError::config_at("output_dir", "no output directory: pass --out or set output_dir"))
}

//! Versioned JSON checkpoints and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::RadialGrid;
use crate::initial_data::DataCase;
use crate::model::ModelParams;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// What a fixture asserts about its own data; re-checked on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataClaim {
    pub case: DataCase,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub pass: bool,
}

fn default_eps() -> f64 {
    crate::initial_data::DEFAULT_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub params: ModelParams,
    pub grid: RadialGrid,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<DataClaim>,
}

impl Checkpoint {
    pub fn new(params: &ModelParams, grid: &RadialGrid, state: &FieldState) -> Self {
        Self {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            params: params.clone(),
            grid: grid.clone(),
            t: state.t,
            u: state.u.clone(),
            v: state.v.clone(),
            claim: None,
        }
    }

    pub fn state(&self) -> Result<FieldState> {
        self.grid.check_len(&self.u)?;
        FieldState::new(self.t, self.u.clone(), self.v.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if c.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported checkpoint schema_version {} (expected {CHECKPOINT_SCHEMA_VERSION})",
                c.schema_version
            )));
        }
        c.params.validate()?;
        let rebuilt = RadialGrid::with_min_cells(c.grid.radius(), c.grid.cells(), 1)?;
        if rebuilt != c.grid || c.grid.radius() != c.params.radius {
            return Err(Error::InvalidConfig("checkpoint grid inconsistent with its radius".into()));
        }
        c.state()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Serialization(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Serialization(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(bytes).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

//! Strict JSON run configuration.

use std::path::{Path, PathBuf};

use rdblow::analysis::DEFAULT_ETA;
use rdblow::auxiliary::{GammaBarRule, MIN_ANNULUS_CELLS};
use rdblow::dynamics::Nonlinearity;
use rdblow::initial_data::{BumpKind, DataCase, DEFAULT_EPS};
use rdblow::io::Checkpoint;
use rdblow::msystem::MSystemSpec;
use rdblow::{BoundaryCondition, ModelParams, RadialGrid, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

pub fn default_schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

fn one() -> u32 {
    1
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_m0() -> f64 {
    10.0
}

fn default_width() -> f64 {
    1.0
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub model: ModelConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub analyses: Vec<AnalysisConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    TwoComponent(ModelParams),
    MSystem(MSystemModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MSystemModel {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub deltas: Vec<f64>,
    pub nonlinearities: Vec<Nonlinearity>,
    pub bc: BoundaryCondition,
}

impl MSystemModel {
    pub fn spec(&self) -> MSystemSpec {
        MSystemSpec {
            m: self.m,
            deltas: self.deltas.clone(),
            nonlinearities: self.nonlinearities.clone(),
            bc: self.bc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Required for m-systems; must equal the model radius otherwise.
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(rename = "J")]
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Zero,
    /// One constant per component.
    Constant { values: Vec<f64> },
    /// The same bump in every component.
    Bump {
        shape: BumpKind,
        amplitude: f64,
        #[serde(default = "default_width")]
        width: f64,
    },
    /// A checkpoint file, resolved relative to the config file.
    Fixture { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisConfig {
    TypeI {
        #[serde(default = "one")]
        window_decades: u32,
    },
    BlowupSet {
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default = "one")]
        window_decades: u32,
    },
    Nondegeneracy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d0: Option<f64>,
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau0: Option<f64>,
        #[serde(default = "default_m0")]
        m0: f64,
    },
    Similarity {
        d: Vec<f64>,
    },
    Jmonitor {
        rho0: f64,
        #[serde(default)]
        rule: GammaBarRule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<f64>,
    },
    Jimonitor {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t0: Option<f64>,
    },
    InitialData {
        case: DataCase,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

impl AnalysisConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AnalysisConfig::TypeI { .. } => "type_i",
            AnalysisConfig::BlowupSet { .. } => "blowup_set",
            AnalysisConfig::Nondegeneracy { .. } => "nondegeneracy",
            AnalysisConfig::Similarity { .. } => "similarity",
            AnalysisConfig::Jmonitor { .. } => "jmonitor",
            AnalysisConfig::Jimonitor { .. } => "jimonitor",
            AnalysisConfig::InitialData { .. } => "initial_data",
        }
    }

    /// Whether the analysis only makes sense after the amplitude cap.
    pub fn needs_blowup(&self) -> bool {
        !matches!(self, AnalysisConfig::InitialData { .. })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Parses and validates a config; relative fixture paths resolve against `base`.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config_at(path, e.into_inner().to_string())
    })?;
    if let (Some(base), InitialConfig::Fixture { path }) = (base, &mut cfg.initial) {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config_at("config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, path.parent())
}

fn core(field: &str) -> impl Fn(rdblow::Error) -> CliError + '_ {
    move |e| CliError::config_at(field, e.to_string())
}

impl RunConfig {
    pub fn components(&self) -> usize {
        match &self.model {
            ModelConfig::TwoComponent(_) => 2,
            ModelConfig::MSystem(m) => m.deltas.len(),
        }
    }

    pub fn radius(&self) -> Result<f64, CliError> {
        match (&self.model, self.grid.radius) {
            (ModelConfig::TwoComponent(p), None) => Ok(p.radius),
            (ModelConfig::TwoComponent(p), Some(r)) if r == p.radius => Ok(r),
            (ModelConfig::TwoComponent(p), Some(r)) => Err(CliError::config_at(
                "grid.R",
                format!("grid radius {r} differs from model R = {}", p.radius),
            )),
            (ModelConfig::MSystem(_), Some(r)) => Ok(r),
            (ModelConfig::MSystem(_), None) => Err(CliError::config_at("grid.R", "m-system runs need grid.R")),
        }
    }

    pub fn grid(&self) -> Result<RadialGrid, CliError> {
        RadialGrid::new(self.radius()?, self.grid.cells).map_err(core("grid"))
    }

    pub fn spec(&self) -> Result<MSystemSpec, CliError> {
        match &self.model {
            ModelConfig::TwoComponent(p) => MSystemSpec::from_params(p).map_err(core("model")),
            ModelConfig::MSystem(m) => {
                let spec = m.spec();
                spec.validate().map_err(core("model"))?;
                Ok(spec)
            }
        }
    }

    pub fn n(&self) -> usize {
        match &self.model {
            ModelConfig::TwoComponent(p) => p.n,
            ModelConfig::MSystem(m) => m.n,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(CliError::config_at(
                "schema_version",
                format!("unsupported schema_version {}", self.schema_version),
            ));
        }
        if let ModelConfig::TwoComponent(p) = &self.model {
            p.validate().map_err(core("model"))?;
        }
        if self.n() == 0 {
            return Err(CliError::config_at("model.n", "n must be at least 1"));
        }
        self.spec()?;
        let grid = self.grid()?;
        self.solver.validate().map_err(core("solver"))?;
        self.validate_initial(&grid)?;
        for (i, a) in self.analyses.iter().enumerate() {
            self.validate_analysis(a, &grid)
                .map_err(|e| e.prefixed(&format!("analyses[{i}]")))?;
        }
        Ok(())
    }

    fn validate_initial(&self, grid: &RadialGrid) -> Result<(), CliError> {
        let m = self.components();
        match &self.initial {
            InitialConfig::Zero => Ok(()),
            InitialConfig::Constant { values } => {
                if values.len() != m {
                    return Err(CliError::config_at(
                        "initial.values",
                        format!("need {m} values, got {}", values.len()),
                    ));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(CliError::config_at("initial.values", "values must be nonnegative"));
                }
                Ok(())
            }
            InitialConfig::Bump { amplitude, width, .. } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0 && *width > 0.0) {
                    return Err(CliError::config_at("initial", "need amplitude ≥ 0 and width > 0"));
                }
                Ok(())
            }
            InitialConfig::Fixture { path } => {
                let ModelConfig::TwoComponent(params) = &self.model else {
                    return Err(CliError::config_at("initial", "fixtures hold two-component data"));
                };
                if !path.exists() {
                    return Err(CliError::config_at(
                        "initial.path",
                        format!("fixture {} does not exist", path.display()),
                    ));
                }
                let cp = Checkpoint::load(path).map_err(core("initial.path"))?;
                if cp.grid != *grid || cp.params.radius != params.radius {
                    return Err(CliError::config_at(
                        "initial.path",
                        format!("fixture {} was written for a different grid", path.display()),
                    ));
                }
                Ok(())
            }
        }
    }

    fn validate_analysis(&self, a: &AnalysisConfig, grid: &RadialGrid) -> Result<(), CliError> {
        let r = grid.radius();
        let two = matches!(self.model, ModelConfig::TwoComponent(_));
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(CliError::config_at(name, format!("{name} must be positive, got {x}")))
            }
        };
        let radius_in = |name: &str, x: f64| {
            if (0.0..=r).contains(&x) {
                Ok(())
            } else {
                Err(CliError::config_at(name, format!("{name} = {x} outside [0, {r}]")))
            }
        };
        if !two && !matches!(a, AnalysisConfig::Jimonitor { .. }) {
            return Err(CliError::config_at(
                "kind",
                format!("{} needs a two_component model", a.name()),
            ));
        }
        match a {
            AnalysisConfig::TypeI { window_decades } | AnalysisConfig::BlowupSet { window_decades, .. }
                if *window_decades == 0 =>
            {
                Err(CliError::config_at("window_decades", "window_decades must be at least 1"))
            }
            AnalysisConfig::TypeI { .. } => Ok(()),
            AnalysisConfig::BlowupSet { eta, .. } => positive("eta", *eta),
            AnalysisConfig::Nondegeneracy { d1, d0, eta, tau0, m0 } => {
                positive("eta", *eta)?;
                positive("m0", *m0)?;
                if let Some(t) = tau0 {
                    positive("tau0", *t)?;
                }
                let (d1, d0) = (d1.unwrap_or(r / 2.0), d0.unwrap_or(0.75 * r));
                if !(0.0 < d1 && d1 < d0 && d0 < r) {
                    return Err(CliError::config_at("d0", format!("need 0 < d1 < d0 < R, got {d1}, {d0}")));
                }
                Ok(())
            }
            AnalysisConfig::Similarity { d } => {
                if d.is_empty() {
                    return Err(CliError::config_at("d", "at least one center is needed"));
                }
                d.iter().try_for_each(|x| radius_in("d", *x))
            }
            AnalysisConfig::Jmonitor { rho0, gamma, eps, .. } => {
                if !(*rho0 > 0.0 && *rho0 < r) {
                    return Err(CliError::config_at("rho0", format!("rho0 = {rho0} outside (0, {r})")));
                }
                // The annulus [rho0/4, rho0/2] must be resolved.
                let cells = rho0 / 4.0 / grid.h();
                if cells < MIN_ANNULUS_CELLS as f64 - 1e-9 {
                    return Err(CliError::config_at(
                        "rho0",
                        format!("annulus spans {cells:.2} cells, need {MIN_ANNULUS_CELLS}; raise J or rho0"),
                    ));
                }
                if let Some(g) = gamma {
                    if !(*g > 0.0 && *g < 1.0) {
                        return Err(CliError::config_at("gamma", "gamma must lie in (0,1)"));
                    }
                }
                if let Some(e) = eps {
                    if !(*e > 0.0 && *e <= 1.0) {
                        return Err(CliError::config_at("eps", "eps must lie in (0,1]"));
                    }
                }
                Ok(())
            }
            AnalysisConfig::Jimonitor { eps1, t0 } => {
                if let Some(e) = eps1 {
                    if !(*e > 0.0 && *e < 1.0) {
                        return Err(CliError::config_at("eps1", "eps1 must lie in (0,1)"));
                    }
                }
                if let Some(t) = t0 {
                    positive("t0", *t)?;
                }
                Ok(())
            }
            AnalysisConfig::InitialData { case, eps } => {
                let ModelConfig::TwoComponent(p) = &self.model else { unreachable!() };
                if case.boundary() != p.bc {
                    return Err(CliError::config_at(
                        "case",
                        format!("{case:?} does not match boundary condition {:?}", p.bc),
                    ));
                }
                if !(*eps > 0.0 && *eps < 1.0) {
                    return Err(CliError::config_at("eps", "eps must lie in (0,1)"));
                }
                Ok(())
            }
        }
    }

    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"kind": "two_component", "delta1": 1, "delta2": 2, "p": 1, "q": 2,
                  "variant": "EXP", "n": 3, "R": 4, "bc": "NEUMANN"},
        "grid": {"J": 64},
        "initial": {"kind": "bump", "shape": "GAUSS_NEUMANN", "amplitude": 1, "width": 1.2}
    }"#;

    #[test]
    fn minimal_gets_defaults() {
        let cfg = parse_config(MINIMAL, None).unwrap();
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.format, OutputFormat::Csv);
        assert!(cfg.analyses.is_empty());
        assert_eq!(cfg.schema_version, CONFIG_SCHEMA_VERSION);
        assert_eq!(cfg.grid().unwrap().radius(), 4.0);
    }

    #[test]
    fn unknown_keys_name_the_key() {
        let text = MINIMAL.replace("\"delta2\": 2,", "\"delta2\": 2, \"delta3\": 5,");
        let err = parse_config(&text, None).unwrap_err();
        assert!(err.to_string().contains("delta3"), "{err}");
        let text = MINIMAL.replace("\"J\": 64", "\"J\": 64, \"K\": 1");
        let err = parse_config(&text, None).unwrap_err();
        assert!(err.to_string().contains("grid") && err.to_string().contains('K'), "{err}");
        let text = MINIMAL.replace("\"width\": 1.2", "\"width\": 1.2, \"sharp\": true");
        assert!(parse_config(&text, None).unwrap_err().to_string().contains("sharp"));
    }

    #[test]
    fn round_trip() {
        let text = MINIMAL.replace(
            "\"grid\"",
            r#""analyses": [{"kind": "type_i"}, {"kind": "nondegeneracy", "m0": 3}, {"kind": "jmonitor", "rho0": 2}], "grid""#,
        )
        .replace("\"J\": 64", "\"J\": 128");
        let cfg = parse_config(&text, None).unwrap();
        assert_eq!(parse_config(&cfg.to_json(), None).unwrap(), cfg);
    }

    #[test]
    fn domain_errors_carry_paths() {
        let text = MINIMAL.replace("\"grid\"", r#""analyses": [{"kind": "blowup_set", "eta": -1}], "grid""#);
        let err = parse_config(&text, None).unwrap_err().to_string();
        assert!(err.contains("analyses[0]") && err.contains("eta"), "{err}");
        let text = MINIMAL.replace("\"grid\"", r#""analyses": [{"kind": "jmonitor", "rho0": 2}], "grid""#);
        let err = parse_config(&text, None).unwrap_err().to_string();
        assert!(err.contains("rho0") && err.contains("cells"), "{err}");
        let text = MINIMAL.replace("\"J\": 64", "\"J\": 64, \"R\": 3");
        assert!(parse_config(&text, None).unwrap_err().to_string().contains("grid.R"));
        let text = MINIMAL.replace("\"amplitude\": 1", "\"amplitude\": \"big\"");
        assert!(parse_config(&text, None).unwrap_err().to_string().contains("initial"));
    }

    #[test]
    fn missing_fixture_is_a_config_error() {
        let text = MINIMAL.replace(
            r#"{"kind": "bump", "shape": "GAUSS_NEUMANN", "amplitude": 1, "width": 1.2}"#,
            r#"{"kind": "fixture", "path": "/nonexistent/data.json"}"#,
        );
        let err = parse_config(&text, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/data.json"));
    }

    #[test]
    fn msystem_model() {
        let text = r#"{
            "model": {"kind": "m_system", "n": 1, "deltas": [1, 1, 1],
                      "nonlinearities": [{"kind": "power", "p": 2}, {"kind": "power", "p": 2}, {"kind": "power", "p": 2}],
                      "bc": "NEUMANN"},
            "grid": {"R": 1, "J": 8},
            "initial": {"kind": "constant", "values": [1, 1, 1]},
            "analyses": [{"kind": "jimonitor"}]
        }"#;
        let cfg = parse_config(text, None).unwrap();
        assert_eq!(cfg.components(), 3);
        let bad = text.replace("\"jimonitor\"", "\"type_i\"");
        assert!(parse_config(&bad, None).is_err());
        let no_r = text.replace("\"R\": 1, ", "");
        assert!(parse_config(&no_r, None).unwrap_err().to_string().contains("grid.R"));
    }
}

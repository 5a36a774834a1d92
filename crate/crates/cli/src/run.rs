//! Single runs: integrate, export the series, then run the analyses.

use std::collections::BTreeMap;
use std::path::Path;

use rdblow::analysis::{blowup_set_radius, estimate_blowup_time, DEFAULT_ETA};
use rdblow::initial_data::{load_fixture, make_bump};
use rdblow::msystem::{integrate_msystem, MTrajectory};
use rdblow::solver::{MCheckpoint, MSample};
use rdblow::{RadialGrid, SolverConfig, StopReason};
use serde::{Deserialize, Serialize};

use crate::analyze::run_analyses;
use crate::config::{AnalysisConfig, InitialConfig, ModelConfig, OutputFormat, RunConfig};
use crate::error::CliError;
use crate::output::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointsFile {
    pub schema_version: u32,
    pub checkpoints: Vec<MCheckpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub schema_version: u32,
    pub probe_radii: Vec<f64>,
    pub samples: Vec<MSample>,
}

/// Blow-up summary of a two-component run that reached the amplitude cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupSummary {
    pub t_est: f64,
    pub r2: f64,
    pub blowup_set_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub status: String,
    pub components: usize,
    pub stop: StopReason,
    pub t_stop: f64,
    pub steps: u64,
    pub samples: usize,
    pub checkpoints: usize,
    /// Solver settings after the analyses added the probes and snapshots they need.
    pub solver: SolverConfig,
    pub probe_radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupSummary>,
    /// Set when the blow-up summary could not be formed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_note: Option<String>,
    /// Artifact file name to content hash.
    pub files: BTreeMap<String, String>,
    pub reports: Vec<String>,
}

fn push_probe(probes: &mut Vec<f64>, r: f64, radius: f64) {
    if !probes.iter().any(|p| (p - r).abs() <= 1e-12 * radius) {
        probes.push(r);
    }
}

/// The configured solver plus the probes, checkpoints and stencils the
/// requested analyses depend on.
pub fn effective_solver(cfg: &RunConfig) -> Result<SolverConfig, CliError> {
    let radius = cfg.radius()?;
    let mut solver = cfg.solver.clone();
    let mut probes = solver.probe_radii_for(radius);
    let mut snapshots = false;
    for a in &cfg.analyses {
        match a {
            AnalysisConfig::Nondegeneracy { d1, d0, .. } => {
                push_probe(&mut probes, d1.unwrap_or(radius / 2.0), radius);
                push_probe(&mut probes, d0.unwrap_or(0.75 * radius), radius);
            }
            AnalysisConfig::Similarity { d } => {
                d.iter().for_each(|&x| push_probe(&mut probes, x, radius));
                snapshots = true;
            }
            AnalysisConfig::Jmonitor { .. } => snapshots = true,
            AnalysisConfig::Jimonitor { .. } => {
                snapshots = true;
                solver.stencil_fraction.get_or_insert(0.5);
            }
            _ => {}
        }
    }
    probes.sort_by(f64::total_cmp);
    solver.probe_radii = Some(probes);
    if snapshots && solver.checkpoint_times.is_empty() && solver.checkpoint_amplitudes.is_empty() {
        let top = solver.amplitude_cap.ceil() as u32;
        solver.checkpoint_amplitudes = (1..top).map(f64::from).filter(|a| *a < solver.amplitude_cap).collect();
    }
    solver.validate().map_err(|e| CliError::config_at("solver", e.to_string()))?;
    Ok(solver)
}

/// Initial fields, one per component.
pub fn initial_fields(cfg: &RunConfig, grid: &RadialGrid) -> Result<Vec<Vec<f64>>, CliError> {
    let m = cfg.components();
    match &cfg.initial {
        InitialConfig::Zero => Ok(vec![vec![0.0; grid.len()]; m]),
        InitialConfig::Constant { values } => Ok(values.iter().map(|&c| vec![c; grid.len()]).collect()),
        InitialConfig::Bump { shape, amplitude, width } => {
            let (u, _) = make_bump(*shape, *amplitude, *width, grid).map_err(|e| CliError::config_at("initial", e.to_string()))?;
            Ok(vec![u; m])
        }
        InitialConfig::Fixture { path } => {
            let (fixture, _) = load_fixture(path).map_err(|e| CliError::config_at("initial.path", e.to_string()))?;
            Ok(vec![fixture.u, fixture.v])
        }
    }
}

pub fn blowup_summary(cfg: &RunConfig, traj: &MTrajectory) -> (Option<BlowupSummary>, Option<String>) {
    let ModelConfig::TwoComponent(params) = &cfg.model else {
        return (None, None);
    };
    if traj.stop != StopReason::AmplitudeCap {
        return (None, Some(format!("run stopped by {:?}", traj.stop)));
    }
    let summary = traj.to_two_component(params).and_then(|t2| {
        let est = estimate_blowup_time(&t2, 1)?;
        Ok(BlowupSummary {
            t_est: est.t_est,
            r2: est.r2,
            blowup_set_radius: blowup_set_radius(&t2, est.t_est, est.t_a, DEFAULT_ETA),
        })
    });
    match summary {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Writes the time series and checkpoints; returns file hashes.
pub fn write_series(cfg: &RunConfig, traj: &MTrajectory, out: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut files = BTreeMap::new();
    let (name, bytes) = match cfg.format {
        OutputFormat::Csv => (TRAJECTORY_CSV, trajectory_csv(traj)),
        OutputFormat::Json => (
            TRAJECTORY_JSON,
            json_bytes(&TrajectoryFile {
                schema_version: REPORT_SCHEMA_VERSION,
                probe_radii: traj.probe_radii.clone(),
                samples: traj.samples.clone(),
            }),
        ),
    };
    files.insert(name.to_string(), write_bytes(&out.join(name), &bytes)?);
    let cps = CheckpointsFile {
        schema_version: REPORT_SCHEMA_VERSION,
        checkpoints: traj.checkpoints.clone(),
    };
    files.insert(CHECKPOINTS_JSON.to_string(), write_json(&out.join(CHECKPOINTS_JSON), &cps)?);
    Ok(files)
}

/// Integrates `cfg` and writes every artifact into `out`.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<RunManifest, CliError> {
    let grid = cfg.grid()?;
    let spec = cfg.spec()?;
    let solver = effective_solver(cfg)?;
    let initial = initial_fields(cfg, &grid)?;
    let traj = integrate_msystem(&spec, &grid, cfg.n(), &solver, initial)?;

    let mut files = BTreeMap::new();
    files.insert(CONFIG_JSON.to_string(), write_bytes(&out.join(CONFIG_JSON), (cfg.to_json() + "\n").as_bytes())?);
    files.extend(write_series(cfg, &traj, out)?);
    let reports = run_analyses(cfg, &traj, &files, out)?;
    let (blowup, blowup_note) = blowup_summary(cfg, &traj);
    let manifest = RunManifest {
        schema_version: REPORT_SCHEMA_VERSION,
        status: "ok".into(),
        components: spec.components(),
        stop: traj.stop,
        t_stop: traj.t_stop,
        steps: traj.steps,
        samples: traj.samples.len(),
        checkpoints: traj.checkpoints.len(),
        solver,
        probe_radii: traj.probe_radii.clone(),
        blowup,
        blowup_note,
        files,
        reports,
    };
    write_json(&out.join(RUN_JSON), &manifest)?;
    Ok(manifest)
}

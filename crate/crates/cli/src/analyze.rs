//! Analysis reports, from a fresh run or from a run directory on disk.

use std::collections::BTreeMap;
use std::path::Path;

use rdblow::analysis::{blowup_set_radius, estimate_blowup_time, nondegeneracy_check, NondegeneracyCriterion};
use rdblow::auxiliary::{default_t1, measure_ratio_bounds, monitor_j, select_eps, select_gamma, AuxiliaryConfig};
use rdblow::initial_data::verify_data_conditions;
use rdblow::msystem::{monitor_ji, select_eps1, MTrajectory};
use rdblow::similarity::{probe_similarity_series, to_similarity};
use rdblow::{StopReason, Trajectory};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{AnalysisConfig, ModelConfig, OutputFormat, RunConfig};
use crate::error::CliError;
use crate::output::*;
use crate::run::{initial_fields, CheckpointsFile, RunManifest, TrajectoryFile};

#[derive(Serialize)]
struct Report<'a> {
    #[serde(flatten)]
    header: ReportHeader,
    #[serde(flatten)]
    body: &'a Value,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

pub fn report_name(index: usize, a: &AnalysisConfig) -> String {
    format!("report_{index:02}_{}.json", a.name())
}

/// Runs every configured analysis and writes one report per analysis.
/// Returns the report file names.
pub fn run_analyses(
    cfg: &RunConfig,
    traj: &MTrajectory,
    inputs: &BTreeMap<String, String>,
    out: &Path,
) -> Result<Vec<String>, CliError> {
    let two = match &cfg.model {
        ModelConfig::TwoComponent(p) => Some(traj.to_two_component(p)?),
        ModelConfig::MSystem(_) => None,
    };
    let mut names = Vec::new();
    for (i, a) in cfg.analyses.iter().enumerate() {
        let (status, body) = if a.needs_blowup() && traj.stop != StopReason::AmplitudeCap {
            ("skipped", json!({ "reason": format!("run stopped by {:?}", traj.stop) }))
        } else {
            ("ok", analyse(cfg, a, traj, two.as_ref())?)
        };
        let report = Report {
            header: ReportHeader {
                schema_version: REPORT_SCHEMA_VERSION,
                analysis: a.name(),
                status,
                inputs: inputs.clone(),
            },
            body: &body,
        };
        let name = report_name(i, a);
        write_json(&out.join(&name), &report)?;
        names.push(name);
    }
    Ok(names)
}

fn need_two(t: Option<&Trajectory>) -> &Trajectory {
    t.expect("validated: analysis needs a two-component model")
}

fn analyse(cfg: &RunConfig, a: &AnalysisConfig, traj: &MTrajectory, two: Option<&Trajectory>) -> Result<Value, CliError> {
    Ok(match a {
        AnalysisConfig::TypeI { window_decades } => to_value(&estimate_blowup_time(need_two(two), *window_decades)?),
        AnalysisConfig::BlowupSet { eta, window_decades } => {
            let t = need_two(two);
            let est = estimate_blowup_time(t, *window_decades)?;
            json!({
                "eta": eta,
                "t_est": est.t_est,
                "t_a": est.t_a,
                "probe_radii": t.probe_radii,
                "radius": blowup_set_radius(t, est.t_est, est.t_a, *eta),
            })
        }
        AnalysisConfig::Nondegeneracy { d1, d0, eta, tau0, m0 } => {
            let t = need_two(two);
            let est = estimate_blowup_time(t, 1)?;
            let mut crit = NondegeneracyCriterion::defaults(t.grid.radius(), &est, *m0);
            crit.d1 = d1.unwrap_or(crit.d1);
            crit.d0 = d0.unwrap_or(crit.d0);
            crit.eta = *eta;
            crit.tau0 = tau0.unwrap_or(crit.tau0);
            json!({ "t_est": est.t_est, "result": nondegeneracy_check(t, est.t_est, &crit)? })
        }
        AnalysisConfig::Similarity { d } => {
            let t = need_two(two);
            let est = estimate_blowup_time(t, 1)?;
            let centers = d
                .iter()
                .map(|&d| {
                    let series = probe_similarity_series(t, est.t_est, d)?;
                    let frames = t
                        .checkpoints
                        .iter()
                        .filter(|c| c.t < est.t_est)
                        .map(|c| {
                            let f = to_similarity(c, &t.params, &t.grid, est.t_est, d)?;
                            Ok(json!({ "t": f.t, "sigma": f.sigma, "bound": f.bound }))
                        })
                        .collect::<Result<Vec<Value>, rdblow::Error>>()?;
                    let sup = frames.iter().filter_map(|f| f["bound"].as_f64()).fold(0.0_f64, f64::max);
                    Ok(json!({ "d": d, "probe_series": series, "frames": frames, "sup_bound": sup }))
                })
                .collect::<Result<Vec<Value>, rdblow::Error>>()?;
            json!({ "t_est": est.t_est, "centers": centers })
        }
        AnalysisConfig::Jmonitor { rho0, rule, gamma, eps } => {
            let t = need_two(two);
            let (p, q) = (t.params.p, t.params.q);
            let est = estimate_blowup_time(t, 1).ok();
            let start = default_t1(t)
                .or_else(|| t.checkpoints.first().map(|c| c.t))
                .ok_or_else(|| CliError::Runtime("jmonitor needs checkpoints".into()))?;
            let window = (start, t.t_stop);
            let mut aux = AuxiliaryConfig {
                rho0: *rho0,
                gamma: 0.0,
                gamma_bar: 0.0,
                eps: 1.0,
                rule: *rule,
            };
            let bounds = measure_ratio_bounds(t, window, (aux.rho1(), aux.rho2()), est.as_ref().map(|e| e.t_est))?;
            let (g, gb) = match gamma {
                Some(g) => (*g, rule.apply(*g, p, q)),
                None => select_gamma(&bounds, p, q, *rule)?,
            };
            aux.gamma = g;
            aux.gamma_bar = gb;
            let first = t.checkpoints_in(window.0, window.1).next().expect("window has checkpoints");
            let chosen = match eps {
                Some(e) => Some(*e),
                None => select_eps(first, &t.grid, &aux)?,
            };
            let monitor = match chosen {
                Some(e) => {
                    aux.eps = e;
                    Some(monitor_j(t, &aux, window)?)
                }
                None => None,
            };
            json!({
                "window": window,
                "ratio_bounds": bounds,
                "gamma": g,
                "gamma_bar": gb,
                "gamma_selected": gamma.is_none(),
                "eps": chosen,
                "eps_selected": eps.is_none(),
                "monitor": monitor,
            })
        }
        AnalysisConfig::Jimonitor { eps1, t0 } => {
            let t0 = t0.unwrap_or(0.0);
            let chosen = match eps1 {
                Some(e) => Some(*e),
                None => select_eps1(traj, t0)?,
            };
            let monitor = chosen.map(|e| monitor_ji(traj, e, t0)).transpose()?;
            json!({ "eps1": chosen, "eps1_selected": eps1.is_none(), "monitor": monitor })
        }
        AnalysisConfig::InitialData { case, eps } => {
            let ModelConfig::TwoComponent(params) = &cfg.model else { unreachable!() };
            let grid = cfg.grid()?;
            let fields = initial_fields(cfg, &grid)?;
            to_value(&verify_data_conditions(&fields[0], &fields[1], params, &grid, *case, *eps, None)?)
        }
    })
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))
}

/// Rebuilds the trajectory of a finished run in `dir`, checking file hashes
/// against the run manifest.
pub fn load_run(cfg: &RunConfig, dir: &Path) -> Result<(MTrajectory, BTreeMap<String, String>), CliError> {
    let manifest: RunManifest = serde_json::from_slice(&read(&dir.join(RUN_JSON))?)
        .map_err(|e| CliError::Runtime(format!("{RUN_JSON}: {e}")))?;
    let series = match cfg.format {
        OutputFormat::Csv => TRAJECTORY_CSV,
        OutputFormat::Json => TRAJECTORY_JSON,
    };
    let mut inputs = BTreeMap::new();
    let mut load = |name: &str| -> Result<Vec<u8>, CliError> {
        let bytes = read(&dir.join(name))?;
        let hash = sha256_hex(&bytes);
        if manifest.files.get(name) != Some(&hash) {
            return Err(CliError::Runtime(format!("{name} does not match the hash recorded in {RUN_JSON}")));
        }
        inputs.insert(name.to_string(), hash);
        Ok(bytes)
    };
    let recorded: RunConfig = serde_json::from_slice(&load(CONFIG_JSON)?)
        .map_err(|e| CliError::Runtime(format!("{CONFIG_JSON}: {e}")))?;
    let comparable = |c: &RunConfig| RunConfig {
        analyses: Vec::new(),
        output_dir: None,
        ..c.clone()
    };
    if comparable(&recorded) != comparable(cfg) {
        return Err(CliError::config_at(
            "config",
            format!("model, grid, solver or initial data differ from the run recorded in {CONFIG_JSON}"),
        ));
    }
    let m = cfg.components();
    let (probe_radii, samples) = match cfg.format {
        OutputFormat::Csv => parse_trajectory_csv(&load(series)?, m)?,
        OutputFormat::Json => {
            let f: TrajectoryFile =
                serde_json::from_slice(&load(series)?).map_err(|e| CliError::Runtime(format!("{series}: {e}")))?;
            (f.probe_radii, f.samples)
        }
    };
    let cps: CheckpointsFile = serde_json::from_slice(&load(CHECKPOINTS_JSON)?)
        .map_err(|e| CliError::Runtime(format!("{CHECKPOINTS_JSON}: {e}")))?;
    let traj = MTrajectory {
        spec: cfg.spec()?,
        grid: cfg.grid()?,
        n: cfg.n(),
        amplitude_cap: manifest.solver.amplitude_cap,
        power_cap: manifest.solver.power_cap,
        probe_radii,
        samples,
        checkpoints: cps.checkpoints,
        stop: manifest.stop,
        t_stop: manifest.t_stop,
        steps: manifest.steps,
    };
    Ok((traj, inputs))
}

/// Re-runs the analyses of `cfg` on the run stored in `dir`.
pub fn analyze_dir(cfg: &RunConfig, dir: &Path) -> Result<Vec<String>, CliError> {
    let (traj, inputs) = load_run(cfg, dir)?;
    run_analyses(cfg, &traj, &inputs, dir)
}

//! Cartesian parameter sweeps over a run template.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rdblow::StopReason;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::parse_config;
use crate::error::CliError;
use crate::output::{json_bytes, write_bytes, write_json, ERROR_JSON, REPORT_SCHEMA_VERSION};
use crate::run::execute;

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dotted path into the template, e.g. `model.delta2` or `model.deltas.1`.
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "crate::config::default_schema_version")]
    pub schema_version: u32,
    /// A run configuration; each cell overrides the axis paths.
    pub template: Value,
    pub axes: Vec<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub values: Vec<f64>,
    pub status: String,
    pub stop: Option<StopReason>,
    #[serde(rename = "T_est")]
    pub t_est: Option<f64>,
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    pub blowup_set_radius: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

fn lookup<'a>(v: &'a mut Value, path: &str) -> Option<&'a mut Value> {
    path.split('.').try_fold(v, |cur, key| match cur {
        Value::Object(map) => map.get_mut(key),
        Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
        _ => None,
    })
}

pub fn parse_sweep(text: &str) -> Result<SweepConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: SweepConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::config_at(e.path().to_string(), e.into_inner().to_string()))?;
    if cfg.schema_version != crate::config::CONFIG_SCHEMA_VERSION {
        return Err(CliError::config_at("schema_version", format!("unsupported schema_version {}", cfg.schema_version)));
    }
    if cfg.axes.is_empty() {
        return Err(CliError::config_at("axes", "at least one axis is needed"));
    }
    let mut probe = cfg.template.clone();
    for (i, axis) in cfg.axes.iter().enumerate() {
        let at = format!("axes[{i}]");
        if axis.values.is_empty() || axis.values.iter().any(|x| !x.is_finite()) {
            return Err(CliError::config_at(format!("{at}.values"), "need at least one finite value"));
        }
        match lookup(&mut probe, &axis.path) {
            Some(Value::Number(_)) => {}
            Some(_) => {
                return Err(CliError::config_at(
                    format!("{at}.path"),
                    format!("template field {} is not numeric", axis.path),
                ))
            }
            None => {
                return Err(CliError::config_at(
                    format!("{at}.path"),
                    format!("template has no field {}", axis.path),
                ))
            }
        }
    }
    Ok(cfg)
}

/// Axis values of every cell, first axis slowest.
pub fn cells(axes: &[Axis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&x| {
                    let mut cell = prefix.clone();
                    cell.push(x);
                    cell
                })
            })
            .collect()
    })
}

fn cell_config(sweep: &SweepConfig, values: &[f64]) -> String {
    let mut doc = sweep.template.clone();
    for (axis, &x) in sweep.axes.iter().zip(values) {
        let slot = lookup(&mut doc, &axis.path).expect("paths checked at parse time");
        *slot = serde_json::Number::from_f64(x).map(Value::Number).expect("finite axis value");
    }
    if let Value::Object(map) = &mut doc {
        map.remove("output_dir");
    }
    serde_json::to_string(&doc).expect("template serializes")
}

fn run_cell(sweep: &SweepConfig, base: Option<&Path>, cell: usize, values: &[f64], out: &Path) -> SweepRow {
    let dir = out.join(format!("cell_{cell:04}"));
    let result = parse_config(&cell_config(sweep, values), base)
        .and_then(|cfg| execute(&cfg, &dir));
    match result {
        Ok(m) => SweepRow {
            cell,
            values: values.to_vec(),
            status: "ok".into(),
            stop: Some(m.stop),
            t_est: m.blowup.as_ref().map(|b| b.t_est),
            r2: m.blowup.as_ref().map(|b| b.r2),
            blowup_set_radius: m.blowup.as_ref().map(|b| b.blowup_set_radius),
            error: None,
        },
        Err(e) => {
            // Best effort: the row already records the failure.
            let _ = write_json(&dir.join(ERROR_JSON), &e.report());
            SweepRow {
                cell,
                values: values.to_vec(),
                status: "error".into(),
                stop: None,
                t_est: None,
                r2: None,
                blowup_set_radius: None,
                error: Some(e.to_string()),
            }
        }
    }
}

fn stop_name(s: StopReason) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn summary_csv(summary: &SweepSummary) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["cell".to_string()];
    header.extend(summary.axes.iter().cloned());
    header.extend(["status", "stop", "T_est", "R2", "blowup_set_radius", "error"].map(String::from));
    w.write_record(&header).expect("in-memory write");
    for r in &summary.rows {
        let mut row = vec![r.cell.to_string()];
        row.extend(r.values.iter().map(f64::to_string));
        row.push(r.status.clone());
        row.push(r.stop.map(stop_name).unwrap_or_default());
        row.push(opt(r.t_est));
        row.push(opt(r.r2));
        row.push(opt(r.blowup_set_radius));
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Runs every cell on `parallel` worker threads; rows come back in cell order
/// whatever the thread count.
pub fn execute_sweep(sweep: &SweepConfig, base: Option<&Path>, out: &Path, parallel: usize) -> Result<SweepSummary, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let grid = cells(&sweep.axes);
    let rows: Vec<SweepRow> = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(k, values)| run_cell(sweep, base, k, values, out))
            .collect()
    });
    let summary = SweepSummary {
        schema_version: REPORT_SCHEMA_VERSION,
        axes: sweep.axes.iter().map(|a| a.path.clone()).collect(),
        rows,
    };
    write_bytes(&out.join(SUMMARY_CSV), &summary_csv(&summary))?;
    write_bytes(&out.join(SUMMARY_JSON), &json_bytes(&summary))?;
    Ok(summary)
}

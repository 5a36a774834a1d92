//! Deterministic artifact writers. Every float is written in its shortest
//! round-trip form and every file is replaced atomically.

use std::collections::BTreeMap;
use std::path::Path;

use rdblow::io::write_atomic;
use rdblow::msystem::MTrajectory;
use rdblow::solver::MSample;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const TRAJECTORY_JSON: &str = "trajectory.json";
pub const CHECKPOINTS_JSON: &str = "checkpoints.json";
pub const RUN_JSON: &str = "run.json";
pub const CONFIG_JSON: &str = "config.json";
pub const ERROR_JSON: &str = "error.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io(path: &Path) -> impl Fn(rdblow::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("writing {}: {e}", path.display()))
}

/// Writes `bytes` and returns their hash.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<String, CliError> {
    write_atomic(path, bytes).map_err(io(path))?;
    Ok(sha256_hex(bytes))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String, CliError> {
    write_bytes(path, &json_bytes(value))
}

/// `u`, `v` for two components, `u1 … um` otherwise.
pub fn component_names(m: usize) -> Vec<String> {
    if m == 2 {
        vec!["u".into(), "v".into()]
    } else {
        (1..=m).map(|i| format!("u{i}")).collect()
    }
}

pub fn csv_header(m: usize, probe_radii: &[f64]) -> Vec<String> {
    let names = component_names(m);
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().map(|c| format!("{c}_max")));
    for c in &names {
        header.extend(probe_radii.iter().map(|r| format!("{c}@{r}")));
    }
    header
}

pub fn trajectory_csv(traj: &MTrajectory) -> Vec<u8> {
    let m = traj.spec.components();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header(m, &traj.probe_radii)).expect("in-memory write");
    for s in &traj.samples {
        let mut row = vec![s.t.to_string()];
        row.extend(s.maxima.iter().map(f64::to_string));
        for probes in &s.probes {
            row.extend(probes.iter().map(f64::to_string));
        }
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Inverse of [`trajectory_csv`] given the component count.
pub fn parse_trajectory_csv(bytes: &[u8], m: usize) -> Result<(Vec<f64>, Vec<MSample>), CliError> {
    let bad = |msg: String| CliError::Runtime(format!("{TRAJECTORY_CSV}: {msg}"));
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if m == 0 || header.len() < 1 + m || (header.len() - 1 - m) % m != 0 {
        return Err(bad(format!("{} columns do not fit {m} components", header.len())));
    }
    let k = (header.len() - 1 - m) / m;
    let first = component_names(m)[0].clone();
    let probe_radii = header[1 + m..1 + m + k]
        .iter()
        .map(|h| {
            h.strip_prefix(&format!("{first}@"))
                .and_then(|r| r.parse::<f64>().ok())
                .ok_or_else(|| bad(format!("unexpected column {h}")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if header != csv_header(m, &probe_radii) {
        return Err(bad("header does not match the configured components".into()));
    }
    let mut samples = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let vals = rec
            .iter()
            .map(|x| x.parse::<f64>().map_err(|e| bad(format!("{x}: {e}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        samples.push(MSample {
            t: vals[0],
            maxima: vals[1..1 + m].to_vec(),
            probes: (0..m).map(|i| vals[1 + m + i * k..1 + m + (i + 1) * k].to_vec()).collect(),
        });
    }
    Ok((probe_radii, samples))
}

/// Header shared by every analysis report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportHeader {
    pub schema_version: u32,
    pub analysis: &'static str,
    pub status: &'static str,
    /// Content hashes of the files the analysis consumed.
    pub inputs: BTreeMap<String, String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rdblow::dynamics::Nonlinearity;
    use rdblow::msystem::MSystemSpec;
    use rdblow::{BoundaryCondition, RadialGrid, StopReason};

    fn traj(m: usize) -> MTrajectory {
        let spec = MSystemSpec::new(vec![1.0; m], vec![Nonlinearity::power(2.0); m], BoundaryCondition::Neumann).unwrap();
        MTrajectory {
            spec,
            grid: RadialGrid::new(1.0, 8).unwrap(),
            n: 1,
            amplitude_cap: 30.0,
            power_cap: 1e8,
            probe_radii: vec![0.125, 0.5],
            samples: vec![
                MSample {
                    t: 0.0,
                    maxima: vec![1.0; m],
                    probes: vec![vec![1.0, 0.1 + 0.2]; m],
                },
                MSample {
                    t: 1.0 / 3.0,
                    maxima: (0..m).map(|i| std::f64::consts::PI + i as f64).collect(),
                    probes: vec![vec![2.0f64.sqrt(), 1e17]; m],
                },
            ],
            checkpoints: Vec::new(),
            stop: StopReason::TimeHorizon,
            t_stop: 1.0,
            steps: 2,
        }
    }

    #[test]
    fn header_layout() {
        assert_eq!(csv_header(2, &[0.5]), ["t", "u_max", "v_max", "u@0.5", "v@0.5"]);
        assert_eq!(csv_header(3, &[]), ["t", "u1_max", "u2_max", "u3_max"]);
    }

    #[test]
    fn csv_round_trips_exactly() {
        for m in [2, 3] {
            let t = traj(m);
            let bytes = trajectory_csv(&t);
            let (radii, samples) = parse_trajectory_csv(&bytes, m).unwrap();
            assert_eq!(radii, t.probe_radii);
            assert_eq!(samples, t.samples);
        }
        assert!(parse_trajectory_csv(&trajectory_csv(&traj(2)), 3).is_err());
        assert!(parse_trajectory_csv(b"t,u_max\n", 2).is_err());
    }

    proptest::proptest! {
        #[test]
        fn every_float_survives_the_csv(
            xs in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 7..=7),
        ) {
            let mut t = traj(2);
            t.samples[1] = MSample { t: xs[0], maxima: vec![xs[1], xs[2]], probes: vec![vec![xs[3], xs[4]], vec![xs[5], xs[6]]] };
            let (_, back) = parse_trajectory_csv(&trajectory_csv(&t), 2).unwrap();
            proptest::prop_assert_eq!(back, t.samples);
        }
    }

    #[test]
    fn hashes_are_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn rdblow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdblow"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

pub fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

pub fn sha(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

/// Every regular file under `dir`, relative path to bytes.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// `u_t = Δu + e^v`, `v_t = Δv + e^u` with flat zero data: `u = v = −ln(1 − t)`.
pub const HOMOGENEOUS: &str = r#"{
    "model": {"kind": "two_component", "delta1": 1, "delta2": 1, "p": 1, "q": 1,
              "variant": "EXP", "n": 1, "R": 1, "bc": "NEUMANN"},
    "grid": {"J": 64},
    "initial": {"kind": "zero"},
    "analyses": [{"kind": "type_i"}, {"kind": "blowup_set"}]
}"#;

/// Flat data with the minus-one variant: zero is a steady state.
pub const STEADY: &str = r#"{
    "model": {"kind": "two_component", "delta1": 1, "delta2": 2, "p": 1, "q": 2,
              "variant": "EXP_MINUS_ONE", "n": 1, "R": 1, "bc": "NEUMANN"},
    "grid": {"J": 16},
    "solver": {"t_horizon": 0.5},
    "initial": {"kind": "zero"},
    "analyses": [{"kind": "type_i"}, {"kind": "nondegeneracy"}]
}"#;

/// Radial bump; blows up at the center.
pub const BUMP: &str = r#"{
    "model": {"kind": "two_component", "delta1": 1, "delta2": 2, "p": 1, "q": 2,
              "variant": "EXP", "n": 3, "R": 4, "bc": "NEUMANN"},
    "grid": {"J": 128},
    "solver": {"probe_radii": [0, 0.5, 1, 2, 3]},
    "initial": {"kind": "bump", "shape": "GAUSS_NEUMANN", "amplitude": 1, "width": 1.2},
    "analyses": [
        {"kind": "initial_data", "case": "NEUMANN_B"},
        {"kind": "type_i"},
        {"kind": "blowup_set"},
        {"kind": "nondegeneracy"},
        {"kind": "similarity", "d": [0, 1]},
        {"kind": "jmonitor", "rho0": 2}
    ]
}"#;

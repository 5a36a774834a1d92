//! Cyclic m-component systems `∂t u_i = δ_i Δu_i + f_i(u_{i+1})`, the ε-chain
//! and the time-derivative monitors `J_i = ∂t u_i − ε_i f_i(u_{i+1})`.

use serde::{Deserialize, Serialize};

use crate::dynamics::Nonlinearity;
use crate::error::{Error, Result};
use crate::field::{FieldState, Sample, StopReason, Trajectory};
use crate::grid::{sup_norm, RadialGrid};
use crate::model::{BoundaryCondition, ModelParams};
use crate::solver::{MCheckpoint, MRun, MSample, MState, MolSystem, SolverConfig};

/// Smallest `ε₁` tried by [`select_eps1`] is `2^{−EPS1_HALVINGS}`.
pub const EPS1_HALVINGS: u32 = 20;
/// `tol = JI_TOL_REL · max_i sup f_i(u_{i+1})`
pub const JI_TOL_REL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MSystemSpec {
    /// Optional redundant component count, checked against the arrays.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub deltas: Vec<f64>,
    pub nonlinearities: Vec<Nonlinearity>,
    pub bc: BoundaryCondition,
}

impl MSystemSpec {
    pub fn new(deltas: Vec<f64>, nonlinearities: Vec<Nonlinearity>, bc: BoundaryCondition) -> Result<Self> {
        let spec = Self {
            m: None,
            deltas,
            nonlinearities,
            bc,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The two-component model written as a cyclic system.
    pub fn from_params(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let minus_one = params.variant.offset() != 0.0;
        Self::new(
            vec![params.delta1, params.delta2],
            vec![Nonlinearity::exp(params.p, minus_one), Nonlinearity::exp(params.q, minus_one)],
            params.bc,
        )
    }

    pub fn components(&self) -> usize {
        self.deltas.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.deltas.len();
        if m < 2 || self.nonlinearities.len() != m {
            return Err(Error::InvalidConfig(format!(
                "need m ≥ 2 matching deltas and nonlinearities, got {} and {}",
                m,
                self.nonlinearities.len()
            )));
        }
        if let Some(declared) = self.m.filter(|&d| d != m) {
            return Err(Error::InvalidConfig(format!("m = {declared} but {m} components given")));
        }
        if self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidConfig("deltas must be positive and finite".into()));
        }
        for (i, f) in self.nonlinearities.iter().enumerate() {
            f.validate()
                .map_err(|e| Error::InvalidConfig(format!("nonlinearities[{i}]: {e}")))?;
            if self.bc == BoundaryCondition::Dirichlet && !f.vanishes_at_zero() {
                return Err(Error::InvalidConfig(format!(
                    "nonlinearities[{i}]: Dirichlet data needs f(0) = 0"
                )));
            }
        }
        Ok(())
    }

    pub fn system(&self, grid: &RadialGrid, n: usize) -> Result<MolSystem> {
        self.validate()?;
        MolSystem::new(grid.clone(), n, self.bc, self.deltas.clone(), self.nonlinearities.clone())
    }
}

/// `ε_i = [1 + δ_i/δ_1·(1/ε_1 − 1)]^{−1}`.
pub fn epsilon_chain(eps1: f64, deltas: &[f64]) -> Result<Vec<f64>> {
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(Error::Domain(format!("eps1 must lie in (0,1), got {eps1}")));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::Domain("deltas must be positive".into()));
    }
    let k = (1.0 / eps1 - 1.0) / deltas[0];
    Ok(std::iter::once(eps1)
        .chain(deltas[1..].iter().map(|d| 1.0 / (1.0 + d * k)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MTrajectory {
    pub spec: MSystemSpec,
    pub grid: RadialGrid,
    pub n: usize,
    pub amplitude_cap: f64,
    pub power_cap: f64,
    pub probe_radii: Vec<f64>,
    pub samples: Vec<MSample>,
    pub checkpoints: Vec<MCheckpoint>,
    pub stop: StopReason,
    pub t_stop: f64,
    pub steps: u64,
}

impl MTrajectory {
    /// `(t, max u_i)` over all samples.
    pub fn maxima_series(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        self.samples.iter().map(|s| (s.t, s.maxima[i])).unzip()
    }

    /// The two-component view of an `m = 2` run of `params`. Stencil
    /// snapshots are dropped.
    pub fn to_two_component(&self, params: &ModelParams) -> Result<Trajectory> {
        if self.spec != MSystemSpec::from_params(params)? || self.n != params.n || self.grid.radius() != params.radius {
            return Err(Error::InvalidConfig("run does not match the two-component parameters".into()));
        }
        let state = |s: &MState| FieldState {
            t: s.t,
            u: s.fields[0].clone(),
            v: s.fields[1].clone(),
        };
        Ok(Trajectory {
            params: *params,
            grid: self.grid.clone(),
            amplitude_cap: self.amplitude_cap,
            probe_radii: self.probe_radii.clone(),
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    t: s.t,
                    u_max: s.maxima[0],
                    v_max: s.maxima[1],
                    u_probe: s.probes[0].clone(),
                    v_probe: s.probes[1].clone(),
                })
                .collect(),
            checkpoints: self.checkpoints.iter().map(|c| state(&c.state)).collect(),
            stop: self.stop,
            t_stop: self.t_stop,
        })
    }
}

pub fn integrate_msystem(
    spec: &MSystemSpec,
    grid: &RadialGrid,
    n: usize,
    cfg: &SolverConfig,
    initial: Vec<Vec<f64>>,
) -> Result<MTrajectory> {
    let system = spec.system(grid, n)?;
    if initial.iter().flatten().any(|x| *x < 0.0) {
        return Err(Error::InvalidConfig("initial data must be nonnegative".into()));
    }
    let MRun {
        probe_radii,
        samples,
        checkpoints,
        stop,
        t_stop,
        steps,
    } = system.integrate(cfg, MState { t: 0.0, fields: initial })?;
    Ok(MTrajectory {
        spec: spec.clone(),
        grid: grid.clone(),
        n,
        amplitude_cap: cfg.amplitude_cap,
        power_cap: cfg.power_cap,
        probe_radii,
        samples,
        checkpoints,
        stop,
        t_stop,
        steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JiRow {
    /// Time at which `∂t u_i` is estimated.
    pub t: f64,
    /// `min_ρ J_i` for each component.
    pub min_j: Vec<f64>,
    /// `max_i sup f_i(u_{i+1})`
    pub scale: f64,
    /// Three-point (second order) or two-point difference.
    pub second_order: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JiReport {
    pub eps1: f64,
    pub eps: Vec<f64>,
    pub t0: f64,
    pub rows: Vec<JiRow>,
    pub min_per_component: Vec<f64>,
    pub min_overall: f64,
    /// Every row has `min J_i ≥ −1e-6·scale`.
    pub pass: bool,
    /// Whether each `u_i` was nondecreasing in time at every node, within
    /// `1e-8·sup|u_i|`, across the rows. Reported, not enforced.
    pub nondecreasing: bool,
}

/// A snapshot sequence ending at the evaluation time, oldest first.
fn difference_stencils(traj: &MTrajectory, t0: f64) -> Vec<Vec<&MState>> {
    let cps = &traj.checkpoints;
    // dedicated stencils win; neighbouring checkpoints are only a fallback
    let stencilled = cps.iter().any(|c| c.stencil.len() >= 2);
    let mut out = Vec::new();
    for (k, c) in cps.iter().enumerate() {
        if c.state.t < t0 {
            continue;
        }
        if c.stencil.len() >= 2 {
            out.push(vec![&c.state, &c.stencil[0], &c.stencil[1]]);
        } else if stencilled {
            continue;
        } else if k >= 2 {
            out.push(vec![&cps[k - 2].state, &cps[k - 1].state, &c.state]);
        } else if k == 1 {
            out.push(vec![&cps[0].state, &c.state]);
        }
    }
    out
}

/// Backward difference weights at the last of `times`.
fn backward_weights(times: &[f64]) -> Vec<f64> {
    match times {
        [a, b] => {
            let h = b - a;
            vec![-1.0 / h, 1.0 / h]
        }
        [a, b, c] => {
            let (h1, h2) = (b - a, c - b);
            vec![
                h2 / (h1 * (h1 + h2)),
                -(h1 + h2) / (h1 * h2),
                (h1 + 2.0 * h2) / (h2 * (h1 + h2)),
            ]
        }
        _ => unreachable!("stencils have two or three points"),
    }
}

fn ji_row(spec: &MSystemSpec, stencil: &[&MState], eps: &[f64]) -> JiRow {
    let m = spec.components();
    let times: Vec<f64> = stencil.iter().map(|s| s.t).collect();
    let w = backward_weights(&times);
    let last = stencil[stencil.len() - 1];
    let mut min_j = vec![f64::INFINITY; m];
    let mut scale: f64 = 0.0;
    for i in 0..m {
        let f = &spec.nonlinearities[i];
        let next = &last.fields[(i + 1) % m];
        for j in 0..last.fields[i].len() {
            let ut: f64 = stencil.iter().zip(&w).map(|(s, wk)| wk * s.fields[i][j]).sum();
            let fv = f.eval(next[j]);
            scale = scale.max(fv.abs());
            min_j[i] = min_j[i].min(ut - eps[i] * fv);
        }
    }
    JiRow {
        t: last.t,
        min_j,
        scale,
        second_order: stencil.len() == 3,
    }
}

fn ji_pass(row: &JiRow) -> bool {
    row.min_j.iter().all(|&j| j >= -JI_TOL_REL * row.scale)
}

/// `J_i` over every checkpoint at or after `t0`, with `ε_i` from the chain.
pub fn monitor_ji(traj: &MTrajectory, eps1: f64, t0: f64) -> Result<JiReport> {
    if traj.checkpoints.len() < 2 && traj.checkpoints.iter().all(|c| c.stencil.len() < 2) {
        return Err(Error::InsufficientData("J_i needs at least two time-adjacent snapshots".into()));
    }
    let eps = epsilon_chain(eps1, &traj.spec.deltas)?;
    let stencils = difference_stencils(traj, t0);
    if stencils.is_empty() {
        return Err(Error::WindowNotCovered(format!("no checkpoint with a difference stencil at t ≥ {t0}")));
    }
    let rows: Vec<JiRow> = stencils.iter().map(|s| ji_row(&traj.spec, s, &eps)).collect();
    let m = traj.spec.components();
    let min_per_component: Vec<f64> = (0..m)
        .map(|i| rows.iter().map(|r| r.min_j[i]).fold(f64::INFINITY, f64::min))
        .collect();
    let min_overall = min_per_component.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = rows.iter().all(ji_pass);

    let evaluated: Vec<&MState> = stencils.iter().map(|s| *s.last().unwrap()).collect();
    let nondecreasing = evaluated.windows(2).all(|pair| {
        (0..m).all(|i| {
            let tol = 1e-8 * sup_norm(&pair[1].fields[i]);
            pair[0].fields[i].iter().zip(&pair[1].fields[i]).all(|(a, b)| b - a >= -tol)
        })
    });
    Ok(JiReport {
        eps1,
        eps,
        t0,
        rows,
        min_per_component,
        min_overall,
        pass,
        nondecreasing,
    })
}

/// Largest `ε₁ ∈ {1/2, 1/4, …, 2^{−20}}` passing the `J_i` test at the first
/// stencil at or after `t0`.
pub fn select_eps1(traj: &MTrajectory, t0: f64) -> Result<Option<f64>> {
    let stencils = difference_stencils(traj, t0);
    let first = stencils
        .first()
        .ok_or_else(|| Error::WindowNotCovered(format!("no checkpoint with a difference stencil at t ≥ {t0}")))?;
    for k in 1..=EPS1_HALVINGS {
        let eps1 = 0.5f64.powi(k as i32);
        let eps = epsilon_chain(eps1, &traj.spec.deltas)?;
        if ji_pass(&ji_row(&traj.spec, first, &eps)) {
            return Ok(Some(eps1));
        }
    }
    Ok(None)
}

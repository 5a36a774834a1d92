//! Sign functionals `J = u_ρ + εc(ρ)e^{γu}` and `J̄ = v_ρ + εc(ρ)e^{γ̄v}` on an
//! annulus, their cutoff and exponent selection, and ratio diagnostics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldState, Trajectory};
use crate::grid::{sup_norm, RadialGrid};
use crate::model::ModelParams;

/// Minimum number of grid cells across `[ρ1, ρ2]`.
pub const MIN_ANNULUS_CELLS: usize = 16;
/// Smallest `ε` tried by [`select_eps`] is `2^{−EPS_HALVINGS}`.
pub const EPS_HALVINGS: u32 = 20;
/// `tol_J = J_TOL_REL · amplitude scale`
pub const J_TOL_REL: f64 = 1e-6;

/// How `γ̄` is tied to `γ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GammaBarRule {
    /// `γ̄ = γp/q`
    #[default]
    GammaPOverQ,
    /// `γ̄ = qγ/p`
    QGammaOverP,
}

impl GammaBarRule {
    pub fn apply(self, gamma: f64, p: f64, q: f64) -> f64 {
        match self {
            GammaBarRule::GammaPOverQ => gamma * p / q,
            GammaBarRule::QGammaOverP => q * gamma / p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxiliaryConfig {
    pub rho0: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
    pub eps: f64,
    #[serde(default)]
    pub rule: GammaBarRule,
}

impl AuxiliaryConfig {
    pub fn rho1(&self) -> f64 {
        self.rho0 / 4.0
    }

    pub fn rho2(&self) -> f64 {
        self.rho0 / 2.0
    }

    pub fn width(&self) -> f64 {
        self.rho2() - self.rho1()
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if !(self.rho0 > 0.0 && self.rho0 < params.radius) {
            return Err(Error::InvalidConfig(format!(
                "rho0 must lie in (0, R = {}), got {}",
                params.radius, self.rho0
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0 && self.gamma_bar > 0.0 && self.gamma_bar < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma and gamma_bar must lie in (0,1), got {} and {}",
                self.gamma, self.gamma_bar
            )));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidConfig(format!("eps must lie in (0,1], got {}", self.eps)));
        }
        let expected = self.rule.apply(self.gamma, params.p, params.q);
        if (self.gamma_bar - expected).abs() > 1e-12 * expected {
            return Err(Error::InvalidConfig(format!(
                "gamma_bar = {} does not match {:?} value {expected}",
                self.gamma_bar, self.rule
            )));
        }
        Ok(())
    }
}

/// `c(ρ) = sin²(π(ρ − ρ1)/ℓ)` with `ℓ = ρ2 − ρ1`, and its first two derivatives.
pub fn cutoff(rho: f64, cfg: &AuxiliaryConfig) -> Result<(f64, f64, f64)> {
    let (r1, r2, l) = (cfg.rho1(), cfg.rho2(), cfg.width());
    let slack = 1e-12 * r2;
    if rho < r1 - slack || rho > r2 + slack {
        return Err(Error::Domain(format!("rho = {rho} outside [{r1}, {r2}]")));
    }
    let x = PI * (rho - r1) / l;
    let s = x.sin();
    Ok((
        s * s,
        PI / l * (2.0 * x).sin(),
        2.0 * PI * PI / (l * l) * (2.0 * x).cos(),
    ))
}

/// `ξ(ρ) = (n−1)/ρ·(1/ρ − c'/c) − c''/c` for `ρ` strictly inside `(ρ1, ρ2)`.
pub fn xi(rho: f64, cfg: &AuxiliaryConfig, n: usize) -> Result<f64> {
    if !(rho > cfg.rho1() && rho < cfg.rho2()) {
        return Err(Error::Domain(format!("xi needs rho strictly inside ({}, {})", cfg.rho1(), cfg.rho2())));
    }
    let (c, c1, c2) = cutoff(rho, cfg)?;
    if c == 0.0 {
        return Err(Error::DivisionGuard(format!("cutoff vanishes at rho = {rho}")));
    }
    let curv = (n as f64 - 1.0) / rho;
    Ok(curv * (1.0 / rho - c1 / c) - c2 / c)
}

/// `ξ` on `points` equally spaced interior points of the annulus.
pub fn xi_scan(cfg: &AuxiliaryConfig, n: usize, points: usize) -> Result<Vec<(f64, f64)>> {
    let step = cfg.width() / (points + 1) as f64;
    (1..=points)
        .map(|k| {
            let rho = cfg.rho1() + k as f64 * step;
            Ok((rho, xi(rho, cfg, n)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioBounds {
    /// `min e^{qu − pv}`
    pub c1p: f64,
    /// `max e^{qu − pv}`
    pub c2p: f64,
    pub window: (f64, f64),
    pub annulus: (f64, f64),
    pub checkpoints_used: usize,
    /// Extrema of `ln(T − t) + q·u` when `T` is supplied.
    pub additive_u: Option<(f64, f64)>,
    pub additive_v: Option<(f64, f64)>,
}

fn annulus_nodes(grid: &RadialGrid, rho_a: f64, rho_b: f64) -> Vec<usize> {
    (0..grid.len())
        .filter(|&j| {
            let r = grid.node(j);
            r >= rho_a - 1e-12 * grid.radius() && r <= rho_b + 1e-12 * grid.radius()
        })
        .collect()
}

fn extend(acc: &mut Option<(f64, f64)>, x: f64) {
    *acc = Some(match *acc {
        None => (x, x),
        Some((lo, hi)) => (lo.min(x), hi.max(x)),
    });
}

/// Bounds of `e^{qu}/e^{pv}` over checkpoints in `window` and nodes in `annulus`.
pub fn measure_ratio_bounds(
    traj: &Trajectory,
    window: (f64, f64),
    annulus: (f64, f64),
    t_blowup: Option<f64>,
) -> Result<RatioBounds> {
    let (p, q) = (traj.params.p, traj.params.q);
    let nodes = annulus_nodes(&traj.grid, annulus.0, annulus.1);
    if nodes.is_empty() {
        return Err(Error::WindowNotCovered(format!("no grid node in annulus {annulus:?}")));
    }
    let mut ratio: Option<(f64, f64)> = None;
    let mut add_u = None;
    let mut add_v = None;
    let mut used = 0;
    for c in traj.checkpoints_in(window.0, window.1) {
        used += 1;
        for &j in &nodes {
            extend(&mut ratio, (q * c.u[j] - p * c.v[j]).exp());
            if let Some(t_b) = t_blowup.filter(|t_b| c.t < *t_b) {
                let lg = (t_b - c.t).ln();
                extend(&mut add_u, lg + q * c.u[j]);
                extend(&mut add_v, lg + p * c.v[j]);
            }
        }
    }
    let (c1p, c2p) = ratio.ok_or_else(|| Error::WindowNotCovered(format!("no checkpoint in window {window:?}")))?;
    Ok(RatioBounds {
        c1p,
        c2p,
        window,
        annulus,
        checkpoints_used: used,
        additive_u: add_u,
        additive_v: add_v,
    })
}

/// Largest `γ = 2^{−k}·min(p,q)` with
/// `γ ≤ ½p(C2')^{−γ/q}`, `γ̄ ≤ ½q(C1')^{γ/q}`, `γ ≤ ½q`, and `γ, γ̄ < 1`.
pub fn select_gamma(bounds: &RatioBounds, p: f64, q: f64, rule: GammaBarRule) -> Result<(f64, f64)> {
    if !(bounds.c1p > 0.0 && bounds.c2p >= bounds.c1p) {
        return Err(Error::Domain(format!("invalid ratio bounds {} .. {}", bounds.c1p, bounds.c2p)));
    }
    let mut gamma = p.min(q);
    for _ in 0..1100 {
        let gbar = rule.apply(gamma, p, q);
        let ok = gamma <= 0.5 * p * bounds.c2p.powf(-gamma / q)
            && gbar <= 0.5 * q * bounds.c1p.powf(gamma / q)
            && gamma <= 0.5 * q
            && gamma < 1.0
            && gbar < 1.0;
        if ok {
            return Ok((gamma, gbar));
        }
        gamma *= 0.5;
    }
    Err(Error::Domain("no admissible gamma".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JProfile {
    pub rho: Vec<f64>,
    pub j: Vec<f64>,
    pub jbar: Vec<f64>,
}

impl JProfile {
    pub fn max_j(&self) -> f64 {
        self.j.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_jbar(&self) -> f64 {
        self.jbar.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `J` and `J̄` at the grid nodes of `[ρ1, ρ2]`, with centered differences.
pub fn compute_j(state: &FieldState, grid: &RadialGrid, cfg: &AuxiliaryConfig) -> Result<JProfile> {
    grid.check_len(&state.u)?;
    let cells = cfg.width() / grid.h();
    if cells < MIN_ANNULUS_CELLS as f64 - 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "annulus spans {cells:.2} cells, need {MIN_ANNULUS_CELLS}"
        )));
    }
    let nodes = annulus_nodes(grid, cfg.rho1(), cfg.rho2());
    let h2 = 2.0 * grid.h();
    let mut out = JProfile {
        rho: Vec::with_capacity(nodes.len()),
        j: Vec::with_capacity(nodes.len()),
        jbar: Vec::with_capacity(nodes.len()),
    };
    for &k in &nodes {
        let rho = grid.node(k);
        let (c, _, _) = cutoff(rho.clamp(cfg.rho1(), cfg.rho2()), cfg)?;
        let u_r = (state.u[k + 1] - state.u[k - 1]) / h2;
        let v_r = (state.v[k + 1] - state.v[k - 1]) / h2;
        out.rho.push(rho);
        out.j.push(u_r + cfg.eps * c * (cfg.gamma * state.u[k]).exp());
        out.jbar.push(v_r + cfg.eps * c * (cfg.gamma_bar * state.v[k]).exp());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JCheckpointRow {
    pub t: f64,
    pub max_j: f64,
    pub max_jbar: f64,
    /// `max(|u|∞, |v|∞)` at the checkpoint.
    pub scale: f64,
    /// `e^{−γu(t,ρ2)}`
    pub identity_lhs: f64,
    /// `εγ(ρ2 − ρ1)/2`
    pub identity_rhs: f64,
    /// Checked only where `max J ≤ 0`.
    pub identity_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JMonitorReport {
    pub config: AuxiliaryConfig,
    pub rows: Vec<JCheckpointRow>,
    pub max_j: f64,
    pub max_jbar: f64,
    /// Every row has `max J, max J̄ ≤ 1e-6·scale`.
    pub sign_ok: bool,
    /// Every checked identity holds.
    pub identity_ok: bool,
}

pub fn monitor_j(traj: &Trajectory, cfg: &AuxiliaryConfig, window: (f64, f64)) -> Result<JMonitorReport> {
    cfg.validate(&traj.params)?;
    let rhs = cfg.eps * cfg.gamma * cfg.width() / 2.0;
    let mut rows = Vec::new();
    for c in traj.checkpoints_in(window.0, window.1) {
        let prof = compute_j(c, &traj.grid, cfg)?;
        let (max_j, max_jbar) = (prof.max_j(), prof.max_jbar());
        let lhs = (-cfg.gamma * traj.grid.interpolate(&c.u, cfg.rho2())).exp();
        rows.push(JCheckpointRow {
            t: c.t,
            max_j,
            max_jbar,
            scale: sup_norm(&c.u).max(sup_norm(&c.v)),
            identity_lhs: lhs,
            identity_rhs: rhs,
            identity_holds: (max_j <= 0.0).then_some(lhs >= rhs),
        });
    }
    if rows.is_empty() {
        return Err(Error::WindowNotCovered(format!("no checkpoint in window {window:?}")));
    }
    let max_j = rows.iter().map(|r| r.max_j).fold(f64::NEG_INFINITY, f64::max);
    let max_jbar = rows.iter().map(|r| r.max_jbar).fold(f64::NEG_INFINITY, f64::max);
    let sign_ok = rows
        .iter()
        .all(|r| r.max_j <= J_TOL_REL * r.scale && r.max_jbar <= J_TOL_REL * r.scale);
    let identity_ok = rows.iter().all(|r| r.identity_holds != Some(false));
    Ok(JMonitorReport {
        config: *cfg,
        rows,
        max_j,
        max_jbar,
        sign_ok,
        identity_ok,
    })
}

/// Largest `ε ∈ {1, 1/2, …, 2^{−20}}` with `J, J̄ ≤ 0` on `state`.
pub fn select_eps(state: &FieldState, grid: &RadialGrid, cfg: &AuxiliaryConfig) -> Result<Option<f64>> {
    let mut trial = *cfg;
    for k in 0..=EPS_HALVINGS {
        trial.eps = 0.5f64.powi(k as i32);
        let prof = compute_j(state, grid, &trial)?;
        if prof.max_j() <= 0.0 && prof.max_jbar() <= 0.0 {
            return Ok(Some(trial.eps));
        }
    }
    Ok(None)
}

/// First checkpoint with `q·u_max ≥ cap/2`.
pub fn default_t1(traj: &Trajectory) -> Option<f64> {
    let q = traj.params.q;
    traj.checkpoints
        .iter()
        .find(|c| q * c.u_max() >= traj.amplitude_cap / 2.0)
        .map(|c| c.t)
}

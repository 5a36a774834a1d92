//! Method-of-lines integration of radial reaction-diffusion systems.
//!
//! Space is discretized with the second-order radial stencil of
//! [`radial_laplacian`]; time with classical RK4 at a step size limited by
//! both the diffusive CFL bound and the reaction stiffness. Both the
//! two-component solver and the cyclic m-component systems run through
//! [`MolSystem`], so they share every arithmetic operation.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Nonlinearity, NonlinearityKind};
use crate::error::{Error, Result};
use crate::field::{FieldState, Sample, StopReason, Trajectory};
use crate::grid::{max_value, RadialGrid};
use crate::model::{BoundaryCondition, ModelParams};

/// Steps shorter than this end the run with [`StopReason::StepUnderflow`].
pub const DT_UNDERFLOW: f64 = 1e-16;

fn default_cfl() -> f64 {
    0.25
}
fn default_reaction() -> f64 {
    0.05
}
fn default_cap() -> f64 {
    30.0
}
fn default_power_cap() -> f64 {
    1e8
}
fn default_horizon() -> f64 {
    100.0
}
fn default_stride() -> usize {
    1
}
fn default_max_steps() -> u64 {
    200_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_reaction")]
    pub reaction_safety: f64,
    /// Cap on `max(q·u_max, p·v_max)` (generally, on `p_i·u_{i+1}` for
    /// exponential terms).
    #[serde(default = "default_cap")]
    pub amplitude_cap: f64,
    /// Cap on the arguments of power nonlinearities.
    #[serde(default = "default_power_cap")]
    pub power_cap: f64,
    #[serde(default = "default_horizon")]
    pub t_horizon: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    #[serde(default)]
    pub checkpoint_times: Vec<f64>,
    /// Amplitude levels at which a checkpoint is taken when first crossed.
    #[serde(default)]
    pub checkpoint_amplitudes: Vec<f64>,
    /// Probe radii; `None` selects `{R/8, R/4, R/2, 3R/4}`.
    #[serde(default)]
    pub probe_radii: Option<Vec<f64>>,
    /// When set, every checkpoint is followed by two extra snapshots spaced
    /// by this fraction of the current step, for backward time differences.
    #[serde(default)]
    pub stencil_fraction: Option<f64>,
    /// Overrides the adaptive step rule.
    #[serde(default)]
    pub fixed_dt: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl_safety: default_cfl(),
            reaction_safety: default_reaction(),
            amplitude_cap: default_cap(),
            power_cap: default_power_cap(),
            t_horizon: default_horizon(),
            sample_stride: default_stride(),
            checkpoint_times: Vec::new(),
            checkpoint_amplitudes: Vec::new(),
            probe_radii: None,
            stencil_fraction: None,
            fixed_dt: None,
            max_steps: default_max_steps(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x > 0.0 && x <= 1.0;
        if !in_unit(self.cfl_safety) {
            return Err(Error::InvalidConfig(format!("cfl_safety must lie in (0,1], got {}", self.cfl_safety)));
        }
        if !in_unit(self.reaction_safety) {
            return Err(Error::InvalidConfig(format!(
                "reaction_safety must lie in (0,1], got {}",
                self.reaction_safety
            )));
        }
        if !(self.amplitude_cap > 0.0 && self.amplitude_cap <= crate::dynamics::EXP_GUARD) {
            return Err(Error::InvalidConfig(format!(
                "amplitude_cap must lie in (0, 700], got {}",
                self.amplitude_cap
            )));
        }
        if !(self.power_cap > 0.0 && self.power_cap.is_finite()) {
            return Err(Error::InvalidConfig("power_cap must be positive".into()));
        }
        if !(self.t_horizon > 0.0 && self.t_horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_horizon must be positive, got {}", self.t_horizon)));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidConfig("sample_stride must be positive".into()));
        }
        if self.checkpoint_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("checkpoint_times must be strictly increasing".into()));
        }
        if let Some(f) = self.stencil_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidConfig("stencil_fraction must lie in (0,1]".into()));
            }
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig("fixed_dt must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn probe_radii_for(&self, radius: f64) -> Vec<f64> {
        match &self.probe_radii {
            Some(r) => r.clone(),
            None => vec![radius / 8.0, radius / 4.0, radius / 2.0, 0.75 * radius],
        }
    }
}

/// Radial Laplacian `u_ρρ + (n−1)/ρ·u_ρ` with the symmetry limit `n·u_ρρ` at the origin.
///
/// At the outer node a reflecting boundary uses the ghost value
/// `field[J+1] = field[J−1]`; a Dirichlet boundary returns 0 there (the node is
/// held fixed by the integrator).
pub fn radial_laplacian(field: &[f64], grid: &RadialGrid, n: usize, bc: BoundaryCondition) -> Result<Vec<f64>> {
    grid.check_len(field)?;
    let mut out = vec![0.0; field.len()];
    laplacian_into(field, grid, n, bc != BoundaryCondition::Dirichlet, &mut out);
    Ok(out)
}

#[inline]
fn laplacian_into(field: &[f64], grid: &RadialGrid, n: usize, reflecting: bool, out: &mut [f64]) {
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let inv_2h = 0.5 / h;
    let last = field.len() - 1;
    let curvature = (n - 1) as f64;
    out[0] = 2.0 * n as f64 * (field[1] - field[0]) * inv_h2;
    for j in 1..last {
        let rho = j as f64 * h;
        out[j] = (field[j + 1] - 2.0 * field[j] + field[j - 1]) * inv_h2
            + curvature / rho * (field[j + 1] - field[j - 1]) * inv_2h;
    }
    out[last] = if reflecting {
        2.0 * (field[last - 1] - field[last]) * inv_h2
    } else {
        0.0
    };
}

/// Snapshot of all components of a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MState {
    pub t: f64,
    pub fields: Vec<Vec<f64>>,
}

/// A checkpoint together with the optional follow-up snapshots used for time
/// differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCheckpoint {
    pub state: MState,
    #[serde(default)]
    pub stencil: Vec<MState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSample {
    pub t: f64,
    pub maxima: Vec<f64>,
    /// `probes[i][k]`: component `i` at probe radius `k`.
    pub probes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MRun {
    pub probe_radii: Vec<f64>,
    pub samples: Vec<MSample>,
    pub checkpoints: Vec<MCheckpoint>,
    pub stop: StopReason,
    pub t_stop: f64,
    pub steps: u64,
}

/// Semidiscrete cyclic system `∂t u_i = δ_i Δu_i + f_i(u_{i+1})` on a radial grid.
#[derive(Debug, Clone)]
pub struct MolSystem {
    grid: RadialGrid,
    n: usize,
    bc: BoundaryCondition,
    deltas: Vec<f64>,
    reactions: Vec<Nonlinearity>,
}

struct Workspace {
    k: [Vec<Vec<f64>>; 4],
    stage: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(m: usize, len: usize) -> Self {
        let zeros = || vec![vec![0.0; len]; m];
        Self {
            k: [zeros(), zeros(), zeros(), zeros()],
            stage: zeros(),
        }
    }
}

impl MolSystem {
    pub fn new(
        grid: RadialGrid,
        n: usize,
        bc: BoundaryCondition,
        deltas: Vec<f64>,
        reactions: Vec<Nonlinearity>,
    ) -> Result<Self> {
        if deltas.len() != reactions.len() || deltas.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "need m ≥ 2 matching diffusivities and nonlinearities, got {} and {}",
                deltas.len(),
                reactions.len()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidConfig("diffusivities must be positive".into()));
        }
        for r in &reactions {
            r.validate()?;
        }
        Ok(Self {
            grid,
            n,
            bc,
            deltas,
            reactions,
        })
    }

    /// The two-component system `u_t = δ₁Δu + f(v)`, `v_t = δ₂Δv + g(u)`.
    pub fn two_component(params: &ModelParams, grid: RadialGrid) -> Result<Self> {
        params.validate()?;
        let minus_one = params.variant.offset() != 0.0;
        Self::new(
            grid,
            params.n,
            params.bc,
            vec![params.delta1, params.delta2],
            vec![Nonlinearity::exp(params.p, minus_one), Nonlinearity::exp(params.q, minus_one)],
        )
    }

    pub fn components(&self) -> usize {
        self.deltas.len()
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    fn reflecting(&self) -> bool {
        self.bc != BoundaryCondition::Dirichlet
    }

    /// Time derivative of every component.
    pub fn rhs(&self, fields: &[Vec<f64>], out: &mut [Vec<f64>]) {
        let m = self.components();
        let reflecting = self.reflecting();
        for i in 0..m {
            let next = &fields[(i + 1) % m];
            let delta = self.deltas[i];
            let reaction = self.reactions[i];
            let dst = &mut out[i];
            laplacian_into(&fields[i], &self.grid, self.n, reflecting, dst);
            for (d, &s) in dst.iter_mut().zip(next) {
                *d = delta * *d + reaction.eval(s);
            }
            if !reflecting {
                let last = dst.len() - 1;
                dst[last] = 0.0;
            }
        }
    }

    fn enforce_bc(&self, fields: &mut [Vec<f64>]) {
        if !self.reflecting() {
            for f in fields.iter_mut() {
                let last = f.len() - 1;
                f[last] = 0.0;
            }
        }
    }

    /// Reaction stiffness estimate, `~1/(T−t)` under type-I growth.
    ///
    /// Exponential term `i` contributes `p_{i−1}·e^{p_i·max u_{i+1}}`; for two
    /// components this is `max(p·e^{q·u_max}, q·e^{p·v_max})`. Power terms
    /// contribute `f_i'(max u_{i+1})`.
    pub fn stiffness(&self, maxima: &[f64]) -> f64 {
        let m = self.components();
        (0..m)
            .map(|i| {
                let r = &self.reactions[i];
                let s = maxima[(i + 1) % m];
                match r.kind {
                    NonlinearityKind::Exp => self.reactions[(i + m - 1) % m].p * (r.p * s).exp(),
                    NonlinearityKind::Power => r.derivative(s),
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn diffusive_dt(&self, cfl_safety: f64) -> f64 {
        let h = self.grid.h();
        let dmax = self.deltas.iter().copied().fold(0.0, f64::max);
        cfl_safety * h * h / (2.0 * self.n as f64 * dmax)
    }

    fn step_rule(&self, cfg: &SolverConfig, maxima: &[f64]) -> f64 {
        if let Some(dt) = cfg.fixed_dt {
            return dt;
        }
        let reaction = cfg.reaction_safety / self.stiffness(maxima);
        self.diffusive_dt(cfg.cfl_safety).min(reaction)
    }

    /// Whether any normalized amplitude has reached its cap.
    fn capped(&self, cfg: &SolverConfig, maxima: &[f64]) -> bool {
        let m = self.components();
        (0..m).any(|i| {
            let r = &self.reactions[i];
            let a = r.amplitude(maxima[(i + 1) % m]);
            match r.kind {
                NonlinearityKind::Exp => a >= cfg.amplitude_cap,
                NonlinearityKind::Power => a >= cfg.power_cap,
            }
        })
    }

    /// Largest normalized amplitude relative to its cap.
    fn amplitude_fraction(&self, cfg: &SolverConfig, maxima: &[f64]) -> f64 {
        let m = self.components();
        (0..m)
            .map(|i| {
                let r = &self.reactions[i];
                let a = r.amplitude(maxima[(i + 1) % m]);
                match r.kind {
                    NonlinearityKind::Exp => a / cfg.amplitude_cap,
                    NonlinearityKind::Power => a / cfg.power_cap,
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn rk4(&self, fields: &mut [Vec<f64>], dt: f64, ws: &mut Workspace) {
        let m = self.components();
        let Workspace { k, stage } = ws;
        let [k1, k2, k3, k4] = k;
        self.rhs(fields, k1);
        for i in 0..m {
            for ((s, &y), &d) in stage[i].iter_mut().zip(&fields[i]).zip(&k1[i]) {
                *s = y + 0.5 * dt * d;
            }
        }
        self.enforce_bc(stage);
        self.rhs(stage, k2);
        for i in 0..m {
            for ((s, &y), &d) in stage[i].iter_mut().zip(&fields[i]).zip(&k2[i]) {
                *s = y + 0.5 * dt * d;
            }
        }
        self.enforce_bc(stage);
        self.rhs(stage, k3);
        for i in 0..m {
            for ((s, &y), &d) in stage[i].iter_mut().zip(&fields[i]).zip(&k3[i]) {
                *s = y + dt * d;
            }
        }
        self.enforce_bc(stage);
        self.rhs(stage, k4);
        let sixth = dt / 6.0;
        for i in 0..m {
            for (j, y) in fields[i].iter_mut().enumerate() {
                *y += sixth * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
            }
        }
        self.enforce_bc(fields);
    }

    /// One RK4 step of size `dt`.
    pub fn advance(&self, state: &MState, dt: f64) -> Result<MState> {
        let mut fields = state.fields.clone();
        let mut ws = Workspace::new(self.components(), self.grid.len());
        self.rk4(&mut fields, dt, &mut ws);
        let t = state.t + dt;
        if fields.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        Ok(MState { t, fields })
    }

    /// Step size the adaptive rule would take from `state`.
    pub fn next_dt(&self, cfg: &SolverConfig, state: &MState) -> f64 {
        let maxima: Vec<f64> = state.fields.iter().map(|f| max_value(f)).collect();
        self.step_rule(cfg, &maxima)
    }

    fn sample(&self, t: f64, fields: &[Vec<f64>], probes: &[f64]) -> MSample {
        MSample {
            t,
            maxima: fields.iter().map(|f| max_value(f)).collect(),
            probes: fields
                .iter()
                .map(|f| probes.iter().map(|&r| self.grid.interpolate(f, r)).collect())
                .collect(),
        }
    }

    pub fn validate_initial(&self, initial: &MState) -> Result<()> {
        if initial.fields.len() != self.components() {
            return Err(Error::LengthMismatch {
                expected: self.components(),
                got: initial.fields.len(),
            });
        }
        for f in &initial.fields {
            self.grid.check_len(f)?;
        }
        if !initial.t.is_finite() || initial.fields.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { t: initial.t });
        }
        Ok(())
    }

    /// Integrates until the amplitude cap, the time horizon, or step underflow.
    pub fn integrate(&self, cfg: &SolverConfig, initial: MState) -> Result<MRun> {
        cfg.validate()?;
        self.validate_initial(&initial)?;
        let probes = cfg.probe_radii_for(self.grid.radius());
        if probes.iter().any(|&r| !(0.0..=self.grid.radius()).contains(&r)) {
            return Err(Error::InvalidConfig("probe radii must lie in [0, R]".into()));
        }

        let m = self.components();
        let mut ws = Workspace::new(m, self.grid.len());
        let mut fields = initial.fields;
        self.enforce_bc(&mut fields);
        let mut t = initial.t;
        let mut carry = 0.0;
        let mut samples = vec![self.sample(t, &fields, &probes)];
        let mut checkpoints = Vec::new();
        let mut pending_times: Vec<f64> = cfg.checkpoint_times.iter().copied().filter(|&c| c > t).collect();
        pending_times.reverse();
        let mut pending_levels: Vec<f64> = cfg.checkpoint_amplitudes.clone();
        pending_levels.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        let mut steps: u64 = 0;
        let mut since_sample = 0usize;
        // amplitude levels are expressed in exponential-cap units unless the
        // system has only power terms
        let level_scale = if self.reactions.iter().any(|r| r.kind == NonlinearityKind::Exp) {
            cfg.amplitude_cap
        } else {
            cfg.power_cap
        };

        let maxima_of = |fields: &[Vec<f64>]| -> Vec<f64> { fields.iter().map(|f| max_value(f)).collect() };

        let stop = loop {
            let maxima = maxima_of(&fields);
            if self.capped(cfg, &maxima) {
                break StopReason::AmplitudeCap;
            }
            if t >= cfg.t_horizon {
                break StopReason::TimeHorizon;
            }
            if steps >= cfg.max_steps {
                return Err(Error::InvalidConfig(format!("max_steps = {} exhausted at t = {t}", cfg.max_steps)));
            }
            let rule = self.step_rule(cfg, &maxima);
            if !(rule >= DT_UNDERFLOW) {
                break StopReason::StepUnderflow;
            }
            let mut dt = rule;
            let mut target = None;
            if let Some(&tc) = pending_times.last() {
                if t + dt >= tc {
                    dt = tc - t;
                    target = Some(tc);
                }
            }
            if t + dt >= cfg.t_horizon && target.map_or(true, |tc| cfg.t_horizon < tc) {
                dt = cfg.t_horizon - t;
                target = Some(cfg.t_horizon);
            }
            self.rk4(&mut fields, dt, &mut ws);
            // compensated clock
            let y = dt - carry;
            let next = t + y;
            carry = (next - t) - y;
            t = next;
            if let Some(tc) = target {
                t = tc;
                carry = 0.0;
            }
            if fields.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { t });
            }
            steps += 1;
            since_sample += 1;
            if since_sample >= cfg.sample_stride {
                since_sample = 0;
                if t > samples.last().map_or(f64::NEG_INFINITY, |s| s.t) {
                    samples.push(self.sample(t, &fields, &probes));
                }
            }

            let mut take = false;
            while pending_times.last().is_some_and(|&tc| tc <= t) {
                pending_times.pop();
                take = true;
            }
            let frac = self.amplitude_fraction(cfg, &maxima_of(&fields));
            while pending_levels.last().is_some_and(|&lvl| frac * level_scale >= lvl) {
                pending_levels.pop();
                take = true;
            }
            if take {
                let state = MState {
                    t,
                    fields: fields.clone(),
                };
                let mut stencil = Vec::new();
                if let Some(fraction) = cfg.stencil_fraction {
                    let tau = fraction * self.step_rule(cfg, &maxima_of(&fields));
                    for _ in 0..2 {
                        self.rk4(&mut fields, tau, &mut ws);
                        let y = tau - carry;
                        let next = t + y;
                        carry = (next - t) - y;
                        t = next;
                        steps += 1;
                        stencil.push(MState {
                            t,
                            fields: fields.clone(),
                        });
                    }
                    if fields.iter().flatten().any(|x| !x.is_finite()) {
                        return Err(Error::NonFinite { t });
                    }
                }
                checkpoints.push(MCheckpoint { state, stencil });
            }
        };

        if samples.last().map_or(true, |s| s.t < t) {
            samples.push(self.sample(t, &fields, &probes));
        }
        if checkpoints.last().map_or(true, |c| c.state.t < t) {
            checkpoints.push(MCheckpoint {
                state: MState { t, fields },
                stencil: Vec::new(),
            });
        }
        Ok(MRun {
            probe_radii: probes,
            samples,
            checkpoints,
            stop,
            t_stop: t,
            steps,
        })
    }
}

/// Two-component solver bound to one parameter set and grid.
#[derive(Debug, Clone)]
pub struct Solver {
    params: ModelParams,
    system: MolSystem,
    cfg: SolverConfig,
}

impl Solver {
    pub fn new(params: ModelParams, grid: RadialGrid, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let system = MolSystem::two_component(&params, grid)?;
        Ok(Self { params, system, cfg })
    }

    pub fn system(&self) -> &MolSystem {
        &self.system
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Step size chosen from `state`:
    /// `min(cfl·h²/(2n·max δ), reaction_safety / max(p·e^{q·u_max}, q·e^{p·v_max}))`.
    pub fn stable_dt(&self, state: &FieldState) -> f64 {
        self.system.step_rule(&self.cfg, &[state.u_max(), state.v_max()])
    }

    /// One explicit RK4 step with boundary conditions enforced after every stage.
    pub fn step(&self, state: &FieldState) -> Result<FieldState> {
        let dt = self.stable_dt(state);
        if !(dt >= DT_UNDERFLOW) {
            return Err(Error::InvalidConfig(format!("step underflow: dt = {dt:e}")));
        }
        let next = self.system.advance(&to_mstate(state), dt)?;
        Ok(from_mstate(next))
    }

    pub fn integrate(&self, initial: FieldState) -> Result<Trajectory> {
        initial.validate()?;
        let run = self.system.integrate(&self.cfg, to_mstate(&initial))?;
        Ok(Trajectory {
            params: self.params,
            grid: self.system.grid.clone(),
            amplitude_cap: self.cfg.amplitude_cap,
            probe_radii: run.probe_radii,
            samples: run
                .samples
                .into_iter()
                .map(|s| Sample {
                    t: s.t,
                    u_max: s.maxima[0],
                    v_max: s.maxima[1],
                    u_probe: s.probes[0].clone(),
                    v_probe: s.probes[1].clone(),
                })
                .collect(),
            checkpoints: run.checkpoints.into_iter().map(|c| from_mstate(c.state)).collect(),
            stop: run.stop,
            t_stop: run.t_stop,
        })
    }
}

pub fn integrate(params: &ModelParams, grid: &RadialGrid, cfg: &SolverConfig, initial: FieldState) -> Result<Trajectory> {
    Solver::new(*params, grid.clone(), cfg.clone())?.integrate(initial)
}

fn to_mstate(s: &FieldState) -> MState {
    MState {
        t: s.t,
        fields: vec![s.u.clone(), s.v.clone()],
    }
}

fn from_mstate(s: MState) -> FieldState {
    let mut it = s.fields.into_iter();
    let u = it.next().unwrap_or_default();
    let v = it.next().unwrap_or_default();
    FieldState { t: s.t, u, v }
}

//! Independent oracles and shared scenario runs for the integration tests.
#![allow(dead_code)]

use std::sync::OnceLock;

use rdblow::analysis::{estimate_blowup_time, BlowupEstimate};
use rdblow::initial_data::{make_bump, BumpKind};
use rdblow::*;

/// Composite Simpson rule with `panels` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn gauss_density(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

pub fn k_weight(delta: f64, theta: f64) -> f64 {
    (-theta * theta / (4.0 * delta)).exp() / (4.0 * std::f64::consts::PI * delta).sqrt()
}

/// Heat-flow form of the OU semigroup applied to `1_{[a,b]}`, by Simpson.
pub fn oracle_indicator_flow(a: f64, b: f64, delta: f64, sigma: f64, theta: f64) -> f64 {
    let mean = theta * (-sigma / 2.0).exp();
    let var = 2.0 * delta * (1.0 - (-sigma).exp());
    simpson(|y| gauss_density(y, mean, var), a, b, 2000)
}

/// Same quantity in closed form.
pub fn erf_indicator_flow(a: f64, b: f64, delta: f64, sigma: f64, theta: f64) -> f64 {
    let mean = theta * (-sigma / 2.0).exp();
    let s = (2.0 * 2.0 * delta * (1.0 - (-sigma).exp())).sqrt();
    0.5 * (libm::erf((b - mean) / s) - libm::erf((a - mean) / s))
}

/// `‖T_δ(σ)1_{[−a,a]}‖_{L^m_{K_λ}} / ‖1_{[−a,a]}‖_{L^k_{K_λ}}` by nested Simpson
/// quadrature; the denominator uses erf.
pub fn oracle_indicator_ratio(a: f64, delta: f64, lambda: f64, sigma: f64, k: f64, m: f64) -> f64 {
    let span = 14.0 * (2.0 * lambda).sqrt();
    let num = simpson(
        |th| oracle_indicator_flow(-a, a, delta, sigma, th).powf(m) * k_weight(lambda, th),
        -span,
        span,
        4000,
    )
    .powf(1.0 / m);
    let den = libm::erf(a / (2.0 * lambda.sqrt())).powf(1.0 / k);
    num / den
}

pub const RUN2_RADIUS: f64 = 4.0;
pub const RUN2_WIDTH: f64 = 1.2;

pub fn run2_params() -> ModelParams {
    ModelParams::new(1.0, 2.0, 1.0, 2.0, Variant::Exp, 3, RUN2_RADIUS, BoundaryCondition::Neumann).unwrap()
}

pub fn run2_config() -> SolverConfig {
    SolverConfig {
        probe_radii: Some(vec![0.0, 0.5, 1.0, 2.0, 3.0]),
        checkpoint_amplitudes: (1..30).map(f64::from).collect(),
        stencil_fraction: Some(0.5),
        ..SolverConfig::default()
    }
}

pub fn run2_data(grid: &RadialGrid) -> (Vec<f64>, Vec<f64>) {
    make_bump(BumpKind::GaussNeumann, 1.0, RUN2_WIDTH, grid).unwrap()
}

pub struct Scenario {
    pub traj: Trajectory,
    pub est: BlowupEstimate,
}

fn run2_at(cells: usize) -> Scenario {
    let grid = RadialGrid::new(RUN2_RADIUS, cells).unwrap();
    let (u, v) = run2_data(&grid);
    let traj = Solver::new(run2_params(), grid, run2_config())
        .unwrap()
        .integrate(FieldState::new(0.0, u, v).unwrap())
        .unwrap();
    let est = estimate_blowup_time(&traj, 1).unwrap();
    Scenario { traj, est }
}

pub fn run2() -> &'static Scenario {
    static RUN: OnceLock<Scenario> = OnceLock::new();
    RUN.get_or_init(|| run2_at(256))
}

pub fn run2_fine() -> &'static Scenario {
    static RUN: OnceLock<Scenario> = OnceLock::new();
    RUN.get_or_init(|| run2_at(512))
}

/// Flat homogeneous run: `u = v = −ln(1 − t)`.
pub fn run1() -> &'static Scenario {
    static RUN: OnceLock<Scenario> = OnceLock::new();
    RUN.get_or_init(|| {
        let params = ModelParams::new(1.0, 1.0, 1.0, 1.0, Variant::Exp, 1, 1.0, BoundaryCondition::Neumann).unwrap();
        let grid = RadialGrid::new(1.0, 64).unwrap();
        let traj = Solver::new(params, grid.clone(), SolverConfig::default())
            .unwrap()
            .integrate(FieldState::zeros(&grid))
            .unwrap();
        let est = estimate_blowup_time(&traj, 1).unwrap();
        Scenario { traj, est }
    })
}

/// One line per acceptance criterion; panics after printing on failure.
pub fn report(criterion: u32, pass: bool, detail: String) {
    println!("criterion {criterion:>2}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}

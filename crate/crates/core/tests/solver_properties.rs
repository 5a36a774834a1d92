mod common;

use common::*;
use proptest::prelude::*;
use rdblow::grid::{is_radially_nonincreasing, sup_norm};
use rdblow::initial_data::{make_bump, verify_data_conditions, BumpKind, DataCase, DEFAULT_EPS};
use rdblow::*;

fn checkpoint_amplitudes() -> Vec<f64> {
    (1..30).map(f64::from).collect()
}

fn assert_shape(traj: &Trajectory) {
    for c in &traj.checkpoints {
        let amp = sup_norm(&c.u).max(sup_norm(&c.v));
        let floor = -1e-12 * amp;
        assert!(c.u.iter().chain(&c.v).all(|x| *x >= floor), "negative value at t = {}", c.t);
        assert!(is_radially_nonincreasing(&c.u, 1e-8), "u not monotone at t = {}", c.t);
        assert!(is_radially_nonincreasing(&c.v, 1e-8), "v not monotone at t = {}", c.t);
    }
}

#[test]
fn canonical_run_keeps_sign_and_monotonicity() {
    let traj = &run2().traj;
    assert!(traj.checkpoints.len() >= 20);
    assert_shape(traj);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(12) })]

    #[test]
    fn admissible_bumps_stay_monotone(amplitude in 0.2f64..2.0, width in 0.6f64..2.0, d2 in 0.5f64..3.0, q in 1.0f64..3.0) {
        let params = ModelParams::new(1.0, d2, 1.0, q, Variant::Exp, 3, RUN2_RADIUS, BoundaryCondition::Neumann).unwrap();
        let grid = RadialGrid::new(RUN2_RADIUS, 48).unwrap();
        let (u, v) = make_bump(BumpKind::GaussNeumann, amplitude, width, &grid).unwrap();
        let data = verify_data_conditions(&u, &v, &params, &grid, DataCase::NeumannB, DEFAULT_EPS, None).unwrap();
        prop_assume!(data.pass);
        let cfg = SolverConfig { checkpoint_amplitudes: checkpoint_amplitudes(), ..SolverConfig::default() };
        let traj = Solver::new(params, grid, cfg).unwrap().integrate(FieldState::new(0.0, u, v).unwrap()).unwrap();
        prop_assert_eq!(traj.stop, StopReason::AmplitudeCap);
        assert_shape(&traj);
    }

    #[test]
    fn nonnegative_data_stays_nonnegative(amplitude in 0.0f64..1.0, width in 0.3f64..2.0) {
        // Minus-one variant with Dirichlet data: zero is a steady state and
        // small data need not blow up, so stop at a fixed horizon.
        let params = ModelParams::new(1.0, 2.0, 1.0, 2.0, Variant::ExpMinusOne, 2, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let grid = RadialGrid::new(1.0, 32).unwrap();
        let (u, _) = make_bump(BumpKind::Cos2Dirichlet, amplitude, width, &grid).unwrap();
        let v: Vec<f64> = u.iter().map(|x| 0.5 * x).collect();
        let cfg = SolverConfig { t_horizon: 0.2, checkpoint_times: vec![0.05, 0.1, 0.15], ..SolverConfig::default() };
        let traj = Solver::new(params, grid, cfg).unwrap().integrate(FieldState::new(0.0, u, v).unwrap()).unwrap();
        for c in &traj.checkpoints {
            let amp = sup_norm(&c.u).max(sup_norm(&c.v)).max(1e-300);
            prop_assert!(c.u.iter().chain(&c.v).all(|x| *x >= -1e-12 * amp));
        }
    }
}

#[test]
fn stop_time_converges_at_second_order() {
    let t_stop = |cells: usize| {
        let grid = RadialGrid::new(RUN2_RADIUS, cells).unwrap();
        let (u, v) = run2_data(&grid);
        Solver::new(run2_params(), grid, SolverConfig::default())
            .unwrap()
            .integrate(FieldState::new(0.0, u, v).unwrap())
            .unwrap()
            .t_stop
    };
    let (a, b, c) = (t_stop(64), t_stop(128), t_stop(256));
    let ratio = (a - b).abs() / (b - c).abs();
    println!("t_stop {a} {b} {c}, ratio {ratio}");
    assert!(ratio >= 3.0, "{ratio}");
}

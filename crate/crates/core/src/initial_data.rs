//! Admissible initial data: bump generators and the discrete verifier for the
//! blow-up hypotheses on `(u0, v0)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{eval_f, eval_g, NonlinearityPair};
use crate::error::{Error, Result};
use crate::grid::{is_constant, is_radially_nonincreasing, sup_norm, RadialGrid, MONOTONE_TOL};
use crate::io::Checkpoint;
use crate::model::{BoundaryCondition, ModelParams};
use crate::solver::radial_laplacian;

pub const DEFAULT_EPS: f64 = 0.1;

/// Relative tolerance used for the nonconstant flag.
const CONSTANT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DataCase {
    DirichletA,
    NeumannB,
    CauchyC,
}

impl DataCase {
    pub fn boundary(self) -> BoundaryCondition {
        match self {
            DataCase::DirichletA => BoundaryCondition::Dirichlet,
            DataCase::NeumannB => BoundaryCondition::Neumann,
            DataCase::CauchyC => BoundaryCondition::CauchyTruncated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataReport {
    pub case: DataCase,
    /// Weight on the reaction term: 1, or `1 − ε` for the Cauchy case.
    pub kappa: f64,
    pub tol: f64,
    /// `min_j δ₁Δu0 + κ f(v0)`
    pub min_residual_u: f64,
    pub min_residual_v: f64,
    pub nontrivial: bool,
    pub boundary_compatible: bool,
    pub monotone: bool,
    pub nonconstant: bool,
    pub pass: bool,
}

/// `1e-8 + 10·h²·scale` with `scale = max(|u0|∞, |v0|∞)`.
pub fn default_tol(grid: &RadialGrid, u0: &[f64], v0: &[f64]) -> f64 {
    let scale = sup_norm(u0).max(sup_norm(v0));
    1e-8 + 10.0 * grid.h() * grid.h() * scale
}

/// Discrete check of the data hypotheses for `case`.
///
/// `tol = None` selects [`default_tol`]. `eps` only enters the Cauchy case.
pub fn verify_data_conditions(
    u0: &[f64],
    v0: &[f64],
    params: &ModelParams,
    grid: &RadialGrid,
    case: DataCase,
    eps: f64,
    tol: Option<f64>,
) -> Result<DataReport> {
    params.validate()?;
    grid.check_len(u0)?;
    grid.check_len(v0)?;
    if case.boundary() != params.bc {
        return Err(Error::InvalidConfig(format!(
            "case {case:?} does not match boundary condition {:?}",
            params.bc
        )));
    }
    if case == DataCase::CauchyC && !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0,1), got {eps}")));
    }
    let tol = tol.unwrap_or_else(|| default_tol(grid, u0, v0));
    let kappa = if case == DataCase::CauchyC { 1.0 - eps } else { 1.0 };
    let pair = NonlinearityPair::from_params(params);
    let lap_u = radial_laplacian(u0, grid, params.n, params.bc)?;
    let lap_v = radial_laplacian(v0, grid, params.n, params.bc)?;

    // The Dirichlet outer node is pinned, so it carries no equation.
    let last = grid.cells();
    let nodes = if params.bc == BoundaryCondition::Dirichlet { last } else { last + 1 };
    let mut min_u = f64::INFINITY;
    let mut min_v = f64::INFINITY;
    let mut nontrivial = false;
    for j in 0..nodes {
        let ru = params.delta1 * lap_u[j] + kappa * eval_f(v0[j], &pair)?;
        let rv = params.delta2 * lap_v[j] + kappa * eval_g(u0[j], &pair)?;
        min_u = min_u.min(ru);
        min_v = min_v.min(rv);
        nontrivial |= ru.abs() > tol || rv.abs() > tol;
    }

    let h = grid.h();
    let boundary_compatible = match case {
        DataCase::DirichletA => u0[last].abs() <= tol && v0[last].abs() <= tol,
        DataCase::NeumannB | DataCase::CauchyC => {
            let du = (u0[last] - u0[last - 1]) / h;
            let dv = (v0[last] - v0[last - 1]) / h;
            du <= tol && dv <= tol && (du - dv).abs() <= tol
        }
    };
    let monotone = is_radially_nonincreasing(u0, MONOTONE_TOL) && is_radially_nonincreasing(v0, MONOTONE_TOL);
    let nonconstant = !(is_constant(u0, CONSTANT_TOL) && is_constant(v0, CONSTANT_TOL));
    let pass = nontrivial && boundary_compatible && monotone && nonconstant && min_u >= -tol && min_v >= -tol;
    Ok(DataReport {
        case,
        kappa,
        tol,
        min_residual_u: min_u,
        min_residual_v: min_v,
        nontrivial,
        boundary_compatible,
        monotone,
        nonconstant,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BumpKind {
    Cos2Dirichlet,
    GaussNeumann,
}

/// Radially nonincreasing bump with `u0 = v0`.
///
/// `GaussNeumann` evaluates the Gaussian at `φ(ρ) = ρ − ρ³/(3R²)` instead of
/// `ρ`; `φ` is increasing with `φ'(R) = 0`, so the profile has zero slope at
/// the outer boundary and matches the plain Gaussian near the origin.
pub fn make_bump(kind: BumpKind, amplitude: f64, width: f64, grid: &RadialGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::Domain(format!("amplitude must be nonnegative, got {amplitude}")));
    }
    let r = grid.radius();
    let u = match kind {
        BumpKind::Cos2Dirichlet => {
            let mut u = grid.sample(|rho| amplitude * (std::f64::consts::PI * rho / (2.0 * r)).cos().powi(2));
            // cos(π/2) is 6e-17, not 0.
            *u.last_mut().unwrap() = 0.0;
            u
        }
        BumpKind::GaussNeumann => {
            if !(width > 0.0) {
                return Err(Error::Domain(format!("width must be positive, got {width}")));
            }
            grid.sample(|rho| {
                let phi = rho - rho.powi(3) / (3.0 * r * r);
                amplitude * (-phi * phi / (2.0 * width * width)).exp()
            })
        }
    };
    Ok((u.clone(), u))
}

/// Loads a checkpoint-format fixture and re-runs the verifier on its data.
///
/// A fixture that claims `pass = true` but fails verification is rejected.
pub fn load_fixture(path: &Path) -> Result<(Checkpoint, Option<DataReport>)> {
    let fixture = Checkpoint::load(path)?;
    let report = match &fixture.claim {
        None => None,
        Some(claim) => {
            let report = verify_data_conditions(
                &fixture.u,
                &fixture.v,
                &fixture.params,
                &fixture.grid,
                claim.case,
                claim.eps,
                None,
            )?;
            if claim.pass && !report.pass {
                return Err(Error::InvalidConfig(format!(
                    "fixture {} claims admissible data but fails verification: {report:?}",
                    path.display()
                )));
            }
            Some(report)
        }
    };
    Ok((fixture, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;
    use proptest::prelude::*;

    fn neumann(variant: Variant) -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0, 1.0, variant, 1, 1.0, BoundaryCondition::Neumann).unwrap()
    }

    #[test]
    fn zero_data_exp_is_constant() {
        let grid = RadialGrid::new(1.0, 32).unwrap();
        let z = vec![0.0; grid.len()];
        let r = verify_data_conditions(&z, &z, &neumann(Variant::Exp), &grid, DataCase::NeumannB, DEFAULT_EPS, None).unwrap();
        assert_eq!(r.min_residual_u, 1.0);
        assert_eq!(r.min_residual_v, 1.0);
        assert!(!r.nonconstant);
        assert!(!r.pass);
    }

    #[test]
    fn zero_data_minus_one_is_trivial() {
        let grid = RadialGrid::new(1.0, 32).unwrap();
        let z = vec![0.0; grid.len()];
        let params = neumann(Variant::ExpMinusOne);
        let r = verify_data_conditions(&z, &z, &params, &grid, DataCase::NeumannB, DEFAULT_EPS, None).unwrap();
        assert_eq!(r.min_residual_u, 0.0);
        assert!(!r.nontrivial);
        assert!(!r.pass);
    }

    fn dirichlet_report(a: f64, radius: f64) -> DataReport {
        let params =
            ModelParams::new(1.0, 1.0, 1.0, 1.0, Variant::ExpMinusOne, 1, radius, BoundaryCondition::Dirichlet)
                .unwrap();
        let grid = RadialGrid::new(radius, 256).unwrap();
        let (u, v) = make_bump(BumpKind::Cos2Dirichlet, a, 0.0, &grid).unwrap();
        verify_data_conditions(&u, &v, &params, &grid, DataCase::DirichletA, DEFAULT_EPS, None).unwrap()
    }

    #[test]
    fn cos2_dirichlet_small_amplitude() {
        // Near the origin the residual is about a·(p − nδπ²/(2R²)).
        for a in [1e-3, 1e-2, 0.1, 0.5] {
            let r = dirichlet_report(a, 4.0);
            assert!(r.pass, "a={a} {r:?}");
            assert!(r.min_residual_u >= 0.0);
        }
        let r = dirichlet_report(0.1, 1.0);
        assert!(!r.pass);
        assert!(r.min_residual_u < -r.tol);
        assert!(r.boundary_compatible && r.monotone && r.nonconstant && r.nontrivial);
    }

    #[test]
    fn bump_shapes() {
        let grid = RadialGrid::new(2.0, 256).unwrap();
        let (u, v) = make_bump(BumpKind::Cos2Dirichlet, 1.0, 0.0, &grid).unwrap();
        assert_eq!(u[0], 1.0);
        assert_eq!(*u.last().unwrap(), 0.0);
        assert_eq!(u, v);
        let (u, _) = make_bump(BumpKind::GaussNeumann, 0.0, 0.5, &grid).unwrap();
        assert!(u.iter().all(|&x| x == 0.0));
        let (u, _) = make_bump(BumpKind::GaussNeumann, 1.0, 2.0 / 4.0, &grid).unwrap();
        assert!(is_radially_nonincreasing(&u, MONOTONE_TOL));
        let j = grid.cells();
        assert!((u[j] - u[j - 1]).abs() / grid.h() < 1e-3 * u[0]);
    }

    #[test]
    fn gauss_neumann_shoulder_has_zero_slope() {
        let r: f64 = 3.0;
        let w = 0.7;
        let u = |rho: f64| {
            let phi = rho - rho.powi(3) / (3.0 * r * r);
            (-phi * phi / (2.0 * w * w)).exp()
        };
        let d = 1e-6;
        assert!(((u(r) - u(r - d)) / d).abs() < 1e-7);
    }

    #[test]
    fn rejects_case_mismatch() {
        let grid = RadialGrid::new(1.0, 32).unwrap();
        let z = vec![0.0; grid.len()];
        assert!(verify_data_conditions(&z, &z, &neumann(Variant::Exp), &grid, DataCase::CauchyC, 0.1, None).is_err());
    }

    #[test]
    fn cauchy_kappa() {
        let params = ModelParams::new(1.0, 2.0, 1.0, 2.0, Variant::Exp, 3, 4.0, BoundaryCondition::CauchyTruncated).unwrap();
        let grid = RadialGrid::new(4.0, 256).unwrap();
        let (u, v) = make_bump(BumpKind::GaussNeumann, 1.0, 1.2, &grid).unwrap();
        let r = verify_data_conditions(&u, &v, &params, &grid, DataCase::CauchyC, 0.1, None).unwrap();
        assert_eq!(r.kappa, 0.9);
        assert!(verify_data_conditions(&u, &v, &params, &grid, DataCase::CauchyC, 1.0, None).is_err());
    }

    proptest! {
        #[test]
        fn pass_is_monotone_in_tol(a in 0.0f64..2.0, w in 0.3f64..2.0, t1 in 1e-10f64..1e-2, k in 1.0f64..1e3) {
            let params = ModelParams::new(1.0, 2.0, 1.0, 2.0, Variant::Exp, 3, 4.0, BoundaryCondition::Neumann).unwrap();
            let grid = RadialGrid::new(4.0, 64).unwrap();
            let (u, v) = make_bump(BumpKind::GaussNeumann, a, w, &grid).unwrap();
            let lo = verify_data_conditions(&u, &v, &params, &grid, DataCase::NeumannB, 0.1, Some(t1)).unwrap();
            let hi = verify_data_conditions(&u, &v, &params, &grid, DataCase::NeumannB, 0.1, Some(t1 * k)).unwrap();
            prop_assert!(!lo.pass || hi.pass || (lo.nontrivial && !hi.nontrivial));
        }
    }
}

//! Uniform radial grids and elementary profile predicates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest cell count accepted by [`RadialGrid::new`].
pub const MIN_CELLS: usize = 8;

/// Default relative tolerance for [`is_radially_nonincreasing`].
pub const MONOTONE_TOL: f64 = 1e-10;

/// Uniform grid `ρ_j = j·h`, `j = 0..=J`, with `ρ_J = R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    radius: f64,
    cells: usize,
    h: f64,
}

impl RadialGrid {
    pub fn new(radius: f64, cells: usize) -> Result<Self> {
        Self::with_min_cells(radius, cells, MIN_CELLS)
    }

    /// Same as [`RadialGrid::new`] with a caller-chosen floor on `J`.
    pub fn with_min_cells(radius: f64, cells: usize, min_cells: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidConfig(format!("grid radius must be positive, got {radius}")));
        }
        if cells < min_cells.max(1) {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least {} cells, got {cells}",
                min_cells.max(1)
            )));
        }
        Ok(Self {
            radius,
            cells,
            h: radius / cells as f64,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of cells `J`; there are `J + 1` nodes.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.cells {
            self.radius
        } else {
            j as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells).map(|j| self.node(j)).collect()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=self.cells).map(|j| f(self.node(j))).collect()
    }

    /// Index of the node closest to `rho`.
    pub fn nearest(&self, rho: f64) -> usize {
        ((rho / self.h).round().max(0.0) as usize).min(self.cells)
    }

    /// Piecewise-linear interpolation of a nodal field at `rho ∈ [0, R]`.
    pub fn interpolate(&self, field: &[f64], rho: f64) -> f64 {
        debug_assert_eq!(field.len(), self.len());
        let x = (rho / self.h).clamp(0.0, self.cells as f64);
        let j = (x.floor() as usize).min(self.cells - 1);
        let frac = x - j as f64;
        if frac == 0.0 {
            field[j]
        } else {
            field[j] + frac * (field[j + 1] - field[j])
        }
    }

    pub fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: field.len(),
            });
        }
        Ok(())
    }
}

/// True iff `field[j+1] − field[j] ≤ tol·max(1, |field[j]|)` for every `j`.
pub fn is_radially_nonincreasing(field: &[f64], tol: f64) -> bool {
    field
        .windows(2)
        .all(|w| w[1] - w[0] <= tol * w[0].abs().max(1.0))
}

pub fn sup_norm(field: &[f64]) -> f64 {
    field.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_value(field: &[f64]) -> f64 {
    field.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_constant(field: &[f64], tol: f64) -> bool {
    match field.first() {
        Some(&first) => field.iter().all(|x| (x - first).abs() <= tol * first.abs().max(1.0)),
        None => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coarse_grid_nodes() {
        let g = RadialGrid::with_min_cells(1.0, 4, 1).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn spacing() {
        let g = RadialGrid::new(2.0, 8).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.node(8), 2.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialGrid::new(1.0, 0).is_err());
        assert!(RadialGrid::new(1.0, 4).is_err());
        assert!(RadialGrid::new(-1.0, 16).is_err());
        assert!(RadialGrid::new(0.0, 16).is_err());
    }

    #[test]
    fn monotone_predicate() {
        let g = RadialGrid::new(1.0, 32).unwrap();
        assert!(is_radially_nonincreasing(&vec![3.0; 33], MONOTONE_TOL));
        assert!(is_radially_nonincreasing(&g.sample(|r| (-r * r).exp()), MONOTONE_TOL));
        assert!(!is_radially_nonincreasing(&g.sample(|r| r), MONOTONE_TOL));
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(sup_norm(&[0.0, -1.0, 0.5]), 1.0);
        assert_eq!(sup_norm(&[0.0, 0.0]), 0.0);
        assert_eq!(sup_norm(&[3.0]), 3.0);
    }

    #[test]
    fn interpolation_hits_nodes() {
        let g = RadialGrid::new(2.0, 16).unwrap();
        let f = g.sample(|r| r * r);
        assert_eq!(g.interpolate(&f, 0.5), 0.25);
        assert!((g.interpolate(&f, 0.0625) - 0.0078125).abs() < 1e-15);
        assert_eq!(g.interpolate(&f, 2.0), 4.0);
    }

    proptest! {
        #[test]
        fn node_gaps_sum_to_radius(radius in 1e-3f64..1e3, cells in 8usize..2000) {
            let g = RadialGrid::new(radius, cells).unwrap();
            let nodes = g.nodes();
            let total: f64 = nodes.windows(2).map(|w| w[1] - w[0]).sum();
            prop_assert!((total - radius).abs() <= 1e-12 * radius);
            prop_assert_eq!(nodes[0], 0.0);
        }

        #[test]
        fn monotone_invariant_under_shift(
            values in proptest::collection::vec(-10.0f64..10.0, 2..40),
            shift in -5.0f64..5.0,
        ) {
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let shifted: Vec<f64> = sorted.iter().map(|x| x + shift).collect();
            prop_assert!(is_radially_nonincreasing(&sorted, MONOTONE_TOL));
            prop_assert!(is_radially_nonincreasing(&shifted, MONOTONE_TOL));
            let raw_shifted: Vec<f64> = values.iter().map(|x| x + shift).collect();
            let strict_raw = values.windows(2).all(|w| w[1] <= w[0]);
            let strict_shifted = raw_shifted.windows(2).all(|w| w[1] <= w[0]);
            prop_assert_eq!(strict_raw, strict_shifted);
        }

        #[test]
        fn sup_norm_homogeneous(
            values in proptest::collection::vec(-1e3f64..1e3, 1..50),
            lambda in -1e3f64..1e3,
        ) {
            let scaled: Vec<f64> = values.iter().map(|x| lambda * x).collect();
            let lhs = sup_norm(&scaled);
            let rhs = lambda.abs() * sup_norm(&values);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
    }
}

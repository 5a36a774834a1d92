//! Field containers and recorded trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{max_value, RadialGrid};
use crate::model::ModelParams;

/// Paired radial profiles at one time instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FieldState {
    pub fn new(t: f64, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let state = Self { t, u, v };
        state.validate()?;
        Ok(state)
    }

    pub fn zeros(grid: &RadialGrid) -> Self {
        Self {
            t: 0.0,
            u: vec![0.0; grid.len()],
            v: vec![0.0; grid.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.u.len() != self.v.len() {
            return Err(Error::LengthMismatch {
                expected: self.u.len(),
                got: self.v.len(),
            });
        }
        if !self.t.is_finite() || self.u.iter().chain(&self.v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { t: self.t });
        }
        Ok(())
    }

    pub fn u_max(&self) -> f64 {
        max_value(&self.u)
    }

    pub fn v_max(&self) -> f64 {
        max_value(&self.v)
    }
}

/// One row of the amplitude time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub u_max: f64,
    pub v_max: f64,
    /// `u` at each probe radius, in the order of [`Trajectory::probe_radii`].
    pub u_probe: Vec<f64>,
    pub v_probe: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StopReason {
    AmplitudeCap,
    TimeHorizon,
    StepUnderflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub grid: RadialGrid,
    pub amplitude_cap: f64,
    pub probe_radii: Vec<f64>,
    pub samples: Vec<Sample>,
    pub checkpoints: Vec<FieldState>,
    pub stop: StopReason,
    pub t_stop: f64,
}

impl Trajectory {
    /// Index of the probe whose radius equals `rho` (relative 1e-12).
    pub fn probe_index(&self, rho: f64) -> Option<usize> {
        self.probe_radii
            .iter()
            .position(|&r| (r - rho).abs() <= 1e-12 * self.grid.radius())
    }

    /// Amplitude `max(q·u_max, p·v_max)` of a sample.
    pub fn amplitude(&self, s: &Sample) -> f64 {
        (self.params.q * s.u_max).max(self.params.p * s.v_max)
    }

    pub fn final_state(&self) -> Option<&FieldState> {
        self.checkpoints.last()
    }

    /// Checkpoints with `t_a ≤ t ≤ t_b`.
    pub fn checkpoints_in(&self, t_a: f64, t_b: f64) -> impl Iterator<Item = &FieldState> {
        self.checkpoints.iter().filter(move |c| c.t >= t_a && c.t <= t_b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonfinite_and_mismatched() {
        assert!(FieldState::new(0.0, vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(FieldState::new(0.0, vec![0.0, f64::NAN], vec![0.0, 0.0]).is_err());
        let s = FieldState::new(0.5, vec![2.0, 1.0], vec![0.0, 3.0]).unwrap();
        assert_eq!(s.u_max(), 2.0);
        assert_eq!(s.v_max(), 3.0);
    }
}

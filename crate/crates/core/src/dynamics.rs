//! Nonlinearities, the exponential transform `U = p·e^{qu}`, `V = q·e^{pv}`,
//! and pointwise residuals of the parabolic inequalities they satisfy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::{max_value, RadialGrid};
use crate::model::{ModelParams, Variant};
use crate::solver::radial_laplacian;

/// Largest exponent accepted before `e^x` is considered saturated.
pub const EXP_GUARD: f64 = 700.0;

/// `f(s) = e^{ps} − m`, `g(s) = e^{qs} − m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearityPair {
    pub p: f64,
    pub q: f64,
    pub m: f64,
}

impl NonlinearityPair {
    pub fn new(p: f64, q: f64, variant: Variant) -> Self {
        Self {
            p,
            q,
            m: variant.offset(),
        }
    }

    pub fn from_params(params: &ModelParams) -> Self {
        Self::new(params.p, params.q, params.variant)
    }
}

fn guarded_exp(exponent: f64) -> Result<f64> {
    if exponent > EXP_GUARD {
        return Err(Error::Saturation {
            exponent,
            guard: EXP_GUARD,
        });
    }
    Ok(exponent.exp())
}

pub fn eval_f(s: f64, pair: &NonlinearityPair) -> Result<f64> {
    Ok(guarded_exp(pair.p * s)? - pair.m)
}

pub fn eval_g(s: f64, pair: &NonlinearityPair) -> Result<f64> {
    Ok(guarded_exp(pair.q * s)? - pair.m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearityKind {
    /// `f(s) = s^p`, `p > 1`
    Power,
    /// `f(s) = e^{ps}` (or `e^{ps} − 1` with `minus_one`)
    Exp,
}

/// One reaction term `f_i` of a cyclic system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub p: f64,
    #[serde(default)]
    pub minus_one: bool,
}

impl Nonlinearity {
    pub fn exp(p: f64, minus_one: bool) -> Self {
        Self {
            kind: NonlinearityKind::Exp,
            p,
            minus_one,
        }
    }

    pub fn power(p: f64) -> Self {
        Self {
            kind: NonlinearityKind::Power,
            p,
            minus_one: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NonlinearityKind::Power if !(self.p > 1.0 && self.p.is_finite()) => Err(Error::InvalidConfig(
                format!("power nonlinearity needs p > 1, got {}", self.p),
            )),
            NonlinearityKind::Power if self.minus_one => Err(Error::InvalidConfig(
                "minus_one applies to exponential nonlinearities only".into(),
            )),
            NonlinearityKind::Exp if !(self.p > 0.0 && self.p.is_finite()) => Err(Error::InvalidConfig(
                format!("exponential nonlinearity needs p > 0, got {}", self.p),
            )),
            _ => Ok(()),
        }
    }

    fn offset(&self) -> f64 {
        if self.minus_one {
            1.0
        } else {
            0.0
        }
    }

    /// Unchecked evaluation used inside the integrator.
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Exp => (self.p * s).exp() - self.offset(),
            NonlinearityKind::Power => s.max(0.0).powf(self.p),
        }
    }

    pub fn eval_checked(&self, s: f64) -> Result<f64> {
        match self.kind {
            NonlinearityKind::Exp => Ok(guarded_exp(self.p * s)? - self.offset()),
            NonlinearityKind::Power => {
                let value = self.eval(s);
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(Error::Saturation {
                        exponent: s,
                        guard: f64::MAX.powf(1.0 / self.p),
                    })
                }
            }
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Exp => self.p * (self.p * s).exp(),
            NonlinearityKind::Power => self.p * s.max(0.0).powf(self.p - 1.0),
        }
    }

    /// The normalized size of the argument compared against the amplitude cap:
    /// `p·s` for exponentials and `s` for powers.
    pub fn amplitude(&self, s: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Exp => self.p * s,
            NonlinearityKind::Power => s,
        }
    }

    pub fn vanishes_at_zero(&self) -> bool {
        match self.kind {
            NonlinearityKind::Exp => self.minus_one,
            NonlinearityKind::Power => true,
        }
    }
}

/// Nodewise `U = p·e^{qu}`, `V = q·e^{pv}`.
pub fn transform_uv(state: &FieldState, params: &ModelParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let (p, q) = (params.p, params.q);
    let u = state
        .u
        .iter()
        .map(|&x| guarded_exp(q * x).map(|e| p * e))
        .collect::<Result<Vec<_>>>()?;
    let v = state
        .v
        .iter()
        .map(|&x| guarded_exp(p * x).map(|e| q * e))
        .collect::<Result<Vec<_>>>()?;
    Ok((u, v))
}

/// Residuals of `U_t − δ₁ΔU ≤ UV − δ₁U⁻¹|∇U|²` and its `V` counterpart.
///
/// Entries cover the interior nodes `1..J` (index `k` ↔ node `k + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub r_u: Vec<f64>,
    pub r_v: Vec<f64>,
}

impl Residuals {
    pub fn max_u(&self) -> f64 {
        max_value(&self.r_u)
    }

    pub fn max_v(&self) -> f64 {
        max_value(&self.r_v)
    }
}

/// `u_t`, `v_t` are the time derivatives of the original fields; the
/// derivatives of the transformed fields follow from `U_t = qU·u_t`.
pub fn subsolution_residual(
    state: &FieldState,
    params: &ModelParams,
    grid: &RadialGrid,
    u_t: &[f64],
    v_t: &[f64],
) -> Result<Residuals> {
    grid.check_len(&state.u)?;
    grid.check_len(&state.v)?;
    grid.check_len(u_t)?;
    grid.check_len(v_t)?;
    let (big_u, big_v) = transform_uv(state, params)?;
    if big_u.iter().chain(&big_v).any(|&x| x <= 0.0) {
        return Err(Error::DivisionGuard("U or V vanishes at a node".into()));
    }
    let lap_u = radial_laplacian(&big_u, grid, params.n, params.bc)?;
    let lap_v = radial_laplacian(&big_v, grid, params.n, params.bc)?;
    let two_h = 2.0 * grid.h();
    let (p, q) = (params.p, params.q);
    let interior = 1..grid.cells();
    let r_u = interior
        .clone()
        .map(|j| {
            let grad = (big_u[j + 1] - big_u[j - 1]) / two_h;
            let dt_u = q * big_u[j] * u_t[j];
            dt_u - params.delta1 * lap_u[j] - big_u[j] * big_v[j] + params.delta1 * grad * grad / big_u[j]
        })
        .collect();
    let r_v = interior
        .map(|j| {
            let grad = (big_v[j + 1] - big_v[j - 1]) / two_h;
            let dt_v = p * big_v[j] * v_t[j];
            dt_v - params.delta2 * lap_v[j] - big_u[j] * big_v[j] + params.delta2 * grad * grad / big_v[j]
        })
        .collect();
    Ok(Residuals { r_u, r_v })
}

/// Residuals at checkpoint `a` using forward differences towards `b`.
pub fn residual_between(
    a: &FieldState,
    b: &FieldState,
    params: &ModelParams,
    grid: &RadialGrid,
) -> Result<Residuals> {
    let dt = b.t - a.t;
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig("checkpoints must be strictly ordered in time".into()));
    }
    let u_t: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| (y - x) / dt).collect();
    let v_t: Vec<f64> = a.v.iter().zip(&b.v).map(|(x, y)| (y - x) / dt).collect();
    subsolution_residual(a, params, grid, &u_t, &v_t)
}

/// `max_j (u_ρ)² / (2·e^{u_max})`: the scalar gradient bound measured on `u`.
///
/// Values at most 1 mean the scalar estimate still holds on this profile.
pub fn gradient_bound_check(state: &FieldState, grid: &RadialGrid) -> f64 {
    let u = &state.u;
    let h = grid.h();
    let last = u.len() - 1;
    let denom = 2.0 * max_value(u).exp();
    (0..u.len())
        .map(|j| {
            let d = if j == 0 {
                (u[1] - u[0]) / h
            } else if j == last {
                (u[last] - u[last - 1]) / h
            } else {
                (u[j + 1] - u[j - 1]) / (2.0 * h)
            };
            d * d / denom
        })
        .fold(0.0, f64::max)
}

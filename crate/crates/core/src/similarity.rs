//! Similarity variables, Gaussian-weighted norms and the one-dimensional
//! Ornstein–Uhlenbeck semigroup `T_δ(σ)` generated by `δ∂²_θ − (θ/2)∂_θ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::transform_uv;
use crate::error::{Error, Result};
use crate::field::{FieldState, Trajectory};
use crate::grid::RadialGrid;
use crate::model::ModelParams;
use crate::quadrature::integrate_breaks;

/// Half-width of the integration window in standard deviations; the Gaussian
/// density underflows to zero well before this.
const STD_SPAN: f64 = 40.0;

/// `K_δ(θ) = (4πδ)^{−1/2} e^{−θ²/(4δ)}`
pub fn kernel(delta: f64, theta: f64) -> f64 {
    (-theta * theta / (4.0 * delta)).exp() / (4.0 * PI * delta).sqrt()
}

/// `K_δ`-mass of `{θ > x}`.
fn upper_tail(delta: f64, x: f64) -> f64 {
    0.5 * libm::erfc(x / (2.0 * delta.sqrt()))
}

/// Real function of one variable with optional structural hints for quadrature.
pub trait Profile {
    fn eval(&self, y: f64) -> f64;

    /// Points where the profile is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `sup |φ|`, when known.
    fn sup_bound(&self) -> Option<f64> {
        None
    }
}

/// Wraps a closure as a [`Profile`] without hints.
pub struct FnProfile<F>(pub F);

impl<F: Fn(f64) -> f64> Profile for FnProfile<F> {
    fn eval(&self, y: f64) -> f64 {
        (self.0)(y)
    }
}

/// Piecewise-linear interpolant, extended by the end values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        if xs.len() < 2 || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("knots must be strictly increasing, at least two".into()));
        }
        Ok(Self { xs, ys })
    }
}

impl Profile for PiecewiseLinear {
    fn eval(&self, y: f64) -> f64 {
        let n = self.xs.len();
        if y <= self.xs[0] {
            return self.ys[0];
        }
        if y >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let j = self.xs.partition_point(|&x| x <= y) - 1;
        let s = (y - self.xs[j]) / (self.xs[j + 1] - self.xs[j]);
        self.ys[j] + s * (self.ys[j + 1] - self.ys[j])
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.xs.clone()
    }

    fn sup_bound(&self) -> Option<f64> {
        Some(self.ys.iter().fold(0.0_f64, |a, y| a.max(y.abs())))
    }
}

/// Indicator of `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indicator {
    pub a: f64,
    pub b: f64,
}

impl Profile for Indicator {
    fn eval(&self, y: f64) -> f64 {
        if y >= self.a && y <= self.b {
            1.0
        } else {
            0.0
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.a, self.b]
    }

    fn sup_bound(&self) -> Option<f64> {
        Some(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Bound on `|value − exact|`, tail included.
    pub abs_err: f64,
}

/// Error on `I^{1/m}` given `I ∈ [lo, hi]`.
fn root_with_error(integral: f64, lo_err: f64, hi_err: f64, m: f64) -> NormEstimate {
    let value = integral.max(0.0).powf(1.0 / m);
    let hi = (integral + hi_err).max(0.0).powf(1.0 / m);
    let lo = (integral - lo_err).max(0.0).powf(1.0 / m);
    NormEstimate {
        value,
        abs_err: (hi - value).max(value - lo),
    }
}

fn check_norm_args(delta: f64, m: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    if !(m >= 1.0) {
        return Err(Error::Domain(format!("norm exponent must be at least 1, got {m}")));
    }
    Ok(())
}

/// `‖φ‖_{L^m_{K_δ}}` for a profile, integrated over `±40` standard deviations
/// of `K_δ`.
pub fn weighted_norm(phi: &dyn Profile, delta: f64, m: f64, tol: f64) -> Result<NormEstimate> {
    check_norm_args(delta, m)?;
    let span = STD_SPAN * (2.0 * delta).sqrt();
    let sd = (2.0 * delta).sqrt();
    let mut breaks = vec![-span, -2.0 * sd, 0.0, 2.0 * sd, span];
    breaks.extend(phi.breakpoints().into_iter().filter(|b| b.abs() < span));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let est = integrate_breaks(|y| phi.eval(y).abs().powf(m) * kernel(delta, y), &breaks, tol, 0.0)?;
    Ok(root_with_error(est.value, est.abs_err, est.abs_err, m))
}

/// `‖φ‖_{L^m_{K_δ}}` for nodal values on a nonuniform `θ` grid, using the
/// piecewise-linear interpolant inside the grid.
///
/// Outside the grid `|φ| ≤ outside_sup` is assumed; its contribution is
/// bounded by the Gaussian tail mass and folded into `abs_err`. Fails if the
/// certified error exceeds `max_err`.
pub fn weighted_norm_grid(
    theta: &[f64],
    phi: &[f64],
    delta: f64,
    m: f64,
    outside_sup: f64,
    max_err: f64,
) -> Result<NormEstimate> {
    check_norm_args(delta, m)?;
    let lin = PiecewiseLinear::new(theta.to_vec(), phi.to_vec())?;
    let tol = 0.1 * max_err.max(0.0);
    let inner = integrate_breaks(|y| lin.eval(y).abs().powf(m) * kernel(delta, y), theta, tol.max(1e-300), 0.0)?;
    let tail = outside_sup.abs().powf(m)
        * (upper_tail(delta, -theta[0]) + upper_tail(delta, *theta.last().unwrap()));
    let est = root_with_error(inner.value, inner.abs_err, inner.abs_err + tail, m);
    if est.abs_err > max_err {
        return Err(Error::Quadrature {
            tol: max_err,
            estimate: est.abs_err,
        });
    }
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityFrame {
    pub d: f64,
    pub t: f64,
    pub t_blowup: f64,
    /// `σ = −ln(T − t)`
    pub sigma: f64,
    /// `θ_j = (ρ_j − d)/√(T − t)`
    pub theta: Vec<f64>,
    /// `(T − t)·U`; zero outside the physical domain.
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    /// `max(w, z)` over the frame.
    pub bound: f64,
}

impl SimilarityFrame {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `‖w‖_{L^m_{K_δ}}` with zero extension outside the frame.
    pub fn norm_w(&self, delta: f64, m: f64) -> Result<NormEstimate> {
        weighted_norm_grid(&self.theta, &self.w, delta, m, 0.0, f64::INFINITY)
    }

    pub fn norm_z(&self, delta: f64, m: f64) -> Result<NormEstimate> {
        weighted_norm_grid(&self.theta, &self.z, delta, m, 0.0, f64::INFINITY)
    }
}

/// Rescales a state around radius `d` at time `state.t < T`.
pub fn to_similarity(
    state: &FieldState,
    params: &ModelParams,
    grid: &RadialGrid,
    t_blowup: f64,
    d: f64,
) -> Result<SimilarityFrame> {
    grid.check_len(&state.u)?;
    let gap = t_blowup - state.t;
    if !(gap > 0.0) {
        return Err(Error::Domain(format!("frame time {} is not before T = {t_blowup}", state.t)));
    }
    let (big_u, big_v) = transform_uv(state, params)?;
    let root = gap.sqrt();
    let theta: Vec<f64> = grid.nodes().iter().map(|rho| (rho - d) / root).collect();
    let w: Vec<f64> = big_u.iter().map(|x| gap * x).collect();
    let z: Vec<f64> = big_v.iter().map(|x| gap * x).collect();
    let bound = w.iter().chain(&z).fold(0.0_f64, |a, &b| a.max(b));
    Ok(SimilarityFrame {
        d,
        t: state.t,
        t_blowup,
        sigma: -gap.ln(),
        theta,
        w,
        z,
        bound,
    })
}

/// `(σ, w(σ,0), z(σ,0))` along the probe at `d`, for samples with `t < T`.
pub fn probe_similarity_series(traj: &Trajectory, t_blowup: f64, d: f64) -> Result<Vec<(f64, f64, f64)>> {
    let k = traj
        .probe_index(d)
        .ok_or_else(|| Error::InvalidConfig(format!("no probe at radius {d}")))?;
    let (p, q) = (traj.params.p, traj.params.q);
    Ok(traj
        .samples
        .iter()
        .filter(|s| s.t < t_blowup)
        .map(|s| {
            let gap = t_blowup - s.t;
            (
                -gap.ln(),
                gap * p * (q * s.u_probe[k]).exp(),
                gap * q * (p * s.v_probe[k]).exp(),
            )
        })
        .collect())
}

/// Mean and variance of the Mehler transition density from `θ` after `σ`.
pub fn mehler_moments(delta: f64, sigma: f64, theta: f64) -> (f64, f64) {
    (theta * (-sigma / 2.0).exp(), -2.0 * delta * (-sigma).exp_m1())
}

/// `(T_δ(σ)φ)(θ) = ∫ G(θe^{−σ/2} − y; 2δ(1 − e^{−σ})) φ(y) dy`.
///
/// Integrated to `1e-11·max(sup|φ|, 1)` absolute; `σ = 0` returns `φ(θ)`.
pub fn ou_semigroup_apply(phi: &dyn Profile, delta: f64, sigma: f64, theta: f64) -> Result<f64> {
    if !(delta > 0.0) || !(sigma >= 0.0) {
        return Err(Error::Domain(format!("need delta > 0 and sigma ≥ 0, got {delta}, {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(phi.eval(theta));
    }
    let (mean, var) = mehler_moments(delta, sigma, theta);
    let sd = var.sqrt();
    let (lo, hi) = (mean - STD_SPAN * sd, mean + STD_SPAN * sd);
    let mut breaks = vec![lo, mean - 2.0 * sd, mean, mean + 2.0 * sd, hi];
    breaks.extend(phi.breakpoints().into_iter().filter(|b| *b > lo && *b < hi));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let norm = 1.0 / (2.0 * PI * var).sqrt();
    let scale = phi.sup_bound().unwrap_or(1.0).max(1.0);
    let est = integrate_breaks(
        |y| {
            let x = y - mean;
            norm * (-x * x / (2.0 * var)).exp() * phi.eval(y)
        },
        &breaks,
        1e-11 * scale,
        0.0,
    )?;
    Ok(est.value)
}

/// `T_δ(σ)φ` as a profile in its own right.
pub struct Evolved<'a> {
    pub phi: &'a dyn Profile,
    pub delta: f64,
    pub sigma: f64,
}

impl Profile for Evolved<'_> {
    fn eval(&self, y: f64) -> f64 {
        ou_semigroup_apply(self.phi, self.delta, self.sigma, y).unwrap_or(f64::NAN)
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.sigma == 0.0 {
            self.phi.breakpoints()
        } else {
            Vec::new()
        }
    }

    fn sup_bound(&self) -> Option<f64> {
        self.phi.sup_bound()
    }
}

/// `‖T_δ(σ)φ‖_{L^m_{K_λ}} / ‖φ‖_{L^k_{K_λ}}`.
pub fn smoothing_ratio(phi: &dyn Profile, delta: f64, sigma: f64, k: f64, m: f64, lambda: f64) -> Result<f64> {
    if !(k >= 1.0 && m >= k) {
        return Err(Error::Domain(format!("need 1 ≤ k ≤ m, got k={k}, m={m}")));
    }
    let tol = 1e-13;
    let den = weighted_norm(phi, lambda, k, tol)?;
    if den.value == 0.0 {
        return Err(Error::DivisionGuard("‖φ‖ vanishes".into()));
    }
    let evolved = Evolved { phi, delta, sigma };
    let num = weighted_norm(&evolved, lambda, m, tol)?;
    Ok(num.value / den.value)
}

/// `(σ, e^σ‖w‖_{L¹_K}, e^σ‖z‖_{L¹_K})` with `K = K_{δ̄}`.
pub fn decay_norm_series(frames: &[SimilarityFrame], delta_bar: f64) -> Result<Vec<(f64, f64, f64)>> {
    if let Some(first) = frames.first() {
        if frames.iter().any(|f| f.d != first.d) {
            return Err(Error::InvalidConfig("frames must share the center d".into()));
        }
    }
    frames
        .iter()
        .map(|f| {
            let scale = f.sigma.exp();
            Ok((f.sigma, scale * f.norm_w(delta_bar, 1.0)?.value, scale * f.norm_z(delta_bar, 1.0)?.value))
        })
        .collect()
}

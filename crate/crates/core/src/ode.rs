//! Adaptive Dormand–Prince 5(4) integrator and the spatially homogeneous
//! ODE reduction `u' = f(v)`, `v' = g(u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Variant;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Accepted points of an integration, with derivatives for Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdePath {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
    /// True when the stop predicate fired.
    pub stopped: bool,
}

impl OdePath {
    /// Cubic Hermite interpolation of component `k` at time `t`.
    pub fn interpolate(&self, k: usize, t: f64) -> Option<f64> {
        let first = *self.times.first()?;
        let last = *self.times.last()?;
        if t < first || t > last {
            return None;
        }
        let i = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return Some(self.states[i][k]),
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (self.states[i][k], self.states[i + 1][k]);
        let (d0, d1) = (self.derivatives[i][k], self.derivatives[i + 1][k]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Some(h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `t0` until `t_end` or until `stop(y)` holds.
    pub fn integrate<F, S>(&self, f: F, t0: f64, y0: Vec<f64>, t_end: f64, stop: S) -> Result<OdePath>
    where
        F: Fn(f64, &[f64], &mut [f64]),
        S: Fn(&[f64]) -> bool,
    {
        let dim = y0.len();
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
        let mut tmp = vec![0.0; dim];
        let mut y_new = vec![0.0; dim];
        let mut t = t0;
        let mut y = y0;
        f(t, &y, &mut k[0]);
        let mut path = OdePath {
            times: vec![t],
            states: vec![y.clone()],
            derivatives: vec![k[0].clone()],
            stopped: stop(&y),
        };
        if path.stopped {
            return Ok(path);
        }
        let scale0 = y.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
        let rate0 = k[0].iter().map(|x| x.abs()).fold(0.0, f64::max);
        let mut h = if rate0 > 0.0 { 1e-3 * scale0 / rate0 } else { 1e-3 };
        h = h.min(t_end - t);

        for _ in 0..self.max_steps {
            if t >= t_end {
                return Ok(path);
            }
            if h < 1e-15 * t.abs().max(1.0) {
                return Ok(path);
            }
            let stages: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
            for (s, coeffs) in stages.iter().enumerate() {
                for d in 0..dim {
                    let incr: f64 = coeffs.iter().enumerate().map(|(j, a)| a * k[j][d]).sum();
                    tmp[d] = y[d] + h * incr;
                }
                let (head, tail) = k.split_at_mut(s + 1);
                let _ = head;
                f(t + C[s + 1] * h, &tmp, &mut tail[0]);
            }
            for d in 0..dim {
                let incr: f64 = B.iter().enumerate().map(|(j, b)| b * k[j][d]).sum();
                y_new[d] = y[d] + h * incr;
            }
            {
                let (head, tail) = k.split_at_mut(6);
                let _ = head;
                f(t + h, &y_new, &mut tail[0]);
            }
            let mut err = 0.0;
            for d in 0..dim {
                let e: f64 = E.iter().enumerate().map(|(j, c)| c * k[j][d]).sum::<f64>() * h;
                let sc = self.atol + self.rtol * y[d].abs().max(y_new[d].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / dim as f64).sqrt();
            if !err.is_finite() {
                h *= 0.2;
                continue;
            }
            if err <= 1.0 {
                t += h;
                y.copy_from_slice(&y_new);
                let fsal = k[6].clone();
                k[0].copy_from_slice(&fsal);
                path.times.push(t);
                path.states.push(y.clone());
                path.derivatives.push(fsal);
                if stop(&y) {
                    path.stopped = true;
                    return Ok(path);
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(t_end - t);
        }
        Err(Error::InsufficientData(format!("ODE integration exceeded {} steps", self.max_steps)))
    }
}

/// Spatially homogeneous solution of the two-component system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSolution {
    pub p: f64,
    pub q: f64,
    pub u0: f64,
    pub v0: f64,
    pub variant: Variant,
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `e^{−p·u0}/p`, attached when `p = q`, `u0 = v0`, variant `EXP`.
    pub t_exact: Option<f64>,
    /// Whether the run ended at the amplitude cap.
    pub reached_cap: bool,
}

impl OdeSolution {
    /// `(u, v)` at time `t` within the integrated range, re-integrated from
    /// the preceding accepted point.
    pub fn at(&self, t: f64) -> Option<(f64, f64)> {
        let first = *self.times.first()?;
        if !(t >= first && t <= self.t_last()) {
            return None;
        }
        let i = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return Some((self.u[i], self.v[i])),
            Err(i) => i - 1,
        };
        let (p, q, m) = (self.p, self.q, self.variant.offset());
        let path = Dopri5::default()
            .integrate(
                |_, y, dy| {
                    dy[0] = (p * y[1]).exp() - m;
                    dy[1] = (q * y[0]).exp() - m;
                },
                self.times[i],
                vec![self.u[i], self.v[i]],
                t,
                |_| false,
            )
            .ok()?;
        let last = path.states.last()?;
        Some((last[0], last[1]))
    }

    pub fn t_last(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Horizon used when the solution does not reach the cap.
pub const ODE_HORIZON: f64 = 1e4;

/// High-accuracy integration of `u' = e^{pv} − m`, `v' = e^{qu} − m` until
/// `max(q·u, p·v) ≥ cap`.
pub fn solve_homogeneous_ode(p: f64, q: f64, u0: f64, v0: f64, variant: Variant, cap: f64) -> Result<OdeSolution> {
    if !(u0 >= 0.0 && v0 >= 0.0) {
        return Err(Error::Domain("homogeneous data must be nonnegative".into()));
    }
    if !(p > 0.0 && q > 0.0 && cap > 0.0) {
        return Err(Error::Domain("p, q and cap must be positive".into()));
    }
    let m = variant.offset();
    let t_exact = (p == q && u0 == v0 && variant == Variant::Exp).then(|| (-p * u0).exp() / p);
    let stationary = (p * v0).exp() - m == 0.0 && (q * u0).exp() - m == 0.0;
    let path = if stationary {
        OdePath {
            times: vec![0.0, ODE_HORIZON],
            states: vec![vec![u0, v0]; 2],
            derivatives: vec![vec![0.0, 0.0]; 2],
            stopped: false,
        }
    } else {
        Dopri5::default().integrate(
            |_, y, dy| {
                dy[0] = (p * y[1]).exp() - m;
                dy[1] = (q * y[0]).exp() - m;
            },
            0.0,
            vec![u0, v0],
            ODE_HORIZON,
            |y| (q * y[0]).max(p * y[1]) >= cap,
        )?
    };
    Ok(OdeSolution {
        p,
        q,
        u0,
        v0,
        variant,
        times: path.times.clone(),
        u: path.states.iter().map(|s| s[0]).collect(),
        v: path.states.iter().map(|s| s[1]).collect(),
        t_exact,
        reached_cap: path.stopped,
    })
}

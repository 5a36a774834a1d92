//! Blow-up time estimation, type-I constants, blow-up set and nondegeneracy
//! diagnostics, and the closed-form exponent and `H` formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Sample, StopReason, Trajectory};

/// Minimum number of samples with `q·u_max ≥ cap/2`.
pub const MIN_LATE_SAMPLES: usize = 50;
/// R² below this marks the fit as not type-I.
pub const TYPE_I_R2: f64 = 0.99;
pub const DEFAULT_ETA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r2: f64,
    /// Mean of the abscissae; the fit is computed in `x − x_mean`.
    pub x_mean: f64,
}

impl LinearFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares `y ≈ a + b·x`, centered in `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!("linear fit needs 3 points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - xm, yi - ym);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let centered = ym;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - centered - slope * (xi - xm)).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(LinearFit {
        intercept: centered - slope * xm,
        slope,
        r2,
        x_mean: xm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate {
    pub t_est: f64,
    pub t_a: f64,
    pub t_b: f64,
    /// `y = a − b·t` with `y = e^{−q·u_max}`.
    pub intercept: f64,
    pub slope: f64,
    pub r2: f64,
    pub samples_used: usize,
    /// `sup (q·u_max + ln(T_est − t))` over the window.
    pub c_type_i_u: f64,
    pub c_type_i_v: f64,
    /// Blow-up time from the same fit on `e^{−p·v_max}`.
    pub t_est_v: f64,
    pub v_discrepancy: f64,
    /// `v_discrepancy ≤ 1e-2·(T_est − t_a)`
    pub v_consistent: bool,
    /// Soft signal: positive slope, `R² ≥ 0.99` and `T_est > t_b`.
    pub type_i: bool,
}

struct ExpFit {
    t_est: f64,
    fit: LinearFit,
}

/// Fits `e^{−amp}` linearly in `t`; `T = a/b`, computed from the centered fit.
fn exp_fit(t: &[f64], amp: &[f64]) -> Result<ExpFit> {
    let y: Vec<f64> = amp.iter().map(|a| (-a).exp()).collect();
    let fit = linear_fit(t, &y)?;
    let b = -fit.slope;
    let t_est = if b > 0.0 {
        let y_mean = fit.intercept + fit.slope * fit.x_mean;
        fit.x_mean + y_mean / b
    } else {
        f64::NAN
    };
    Ok(ExpFit { t_est, fit })
}

fn sup_log_gap(t: &[f64], amp: &[f64], t_est: f64) -> f64 {
    t.iter()
        .zip(amp)
        .filter(|(ti, _)| **ti < t_est)
        .map(|(ti, a)| a + (t_est - ti).ln())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Blow-up time from the last `window_decades` decades of `e^{−q·u_max}`.
///
/// Works on raw samples so synthetic series can be analysed directly.
pub fn estimate_from_samples(
    samples: &[Sample],
    p: f64,
    q: f64,
    amplitude_cap: f64,
    window_decades: u32,
) -> Result<BlowupEstimate> {
    if window_decades == 0 {
        return Err(Error::Domain("window_decades must be positive".into()));
    }
    let late = samples.iter().filter(|s| q * s.u_max >= amplitude_cap / 2.0).count();
    if late < MIN_LATE_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{late} samples with q·u_max ≥ cap/2, need {MIN_LATE_SAMPLES}"
        )));
    }
    let end = samples.iter().map(|s| q * s.u_max).fold(f64::NEG_INFINITY, f64::max);
    let floor = end - window_decades as f64 * std::f64::consts::LN_10;
    let window: Vec<&Sample> = samples.iter().filter(|s| q * s.u_max >= floor).collect();
    let t: Vec<f64> = window.iter().map(|s| s.t).collect();
    let au: Vec<f64> = window.iter().map(|s| q * s.u_max).collect();
    let av: Vec<f64> = window.iter().map(|s| p * s.v_max).collect();
    let (t_a, t_b) = (t[0], *t.last().unwrap());

    let fu = exp_fit(&t, &au)?;
    let fv = exp_fit(&t, &av)?;
    let t_est = fu.t_est;
    let v_discrepancy = (fv.t_est - t_est).abs();
    let type_i = t_est.is_finite() && t_est > t_b && fu.fit.r2 >= TYPE_I_R2;
    Ok(BlowupEstimate {
        t_est,
        t_a,
        t_b,
        intercept: fu.fit.intercept,
        slope: -fu.fit.slope,
        r2: fu.fit.r2,
        samples_used: t.len(),
        c_type_i_u: sup_log_gap(&t, &au, t_est),
        c_type_i_v: sup_log_gap(&t, &av, t_est),
        t_est_v: fv.t_est,
        v_discrepancy,
        v_consistent: v_discrepancy <= 1e-2 * (t_est - t_a),
        type_i,
    })
}

/// [`estimate_from_samples`] on a trajectory that stopped at the amplitude cap.
pub fn estimate_blowup_time(traj: &Trajectory, window_decades: u32) -> Result<BlowupEstimate> {
    if traj.stop != StopReason::AmplitudeCap {
        return Err(Error::InsufficientData(format!(
            "trajectory stopped by {:?}, not by the amplitude cap",
            traj.stop
        )));
    }
    estimate_from_samples(
        &traj.samples,
        traj.params.p,
        traj.params.q,
        traj.amplitude_cap,
        window_decades,
    )
}

/// Largest probe radius `d > 0` with `min_{t ∈ [t_a, T_est)} (T_est − t)·p·e^{q·u(t,d)} ≥ eta`,
/// or 0 if there is none.
pub fn blowup_set_radius(traj: &Trajectory, t_est: f64, t_a: f64, eta: f64) -> f64 {
    let (p, q) = (traj.params.p, traj.params.q);
    let mut best: f64 = 0.0;
    for (k, &d) in traj.probe_radii.iter().enumerate() {
        if d <= 0.0 {
            continue;
        }
        let liminf = traj
            .samples
            .iter()
            .filter(|s| s.t >= t_a && s.t < t_est)
            .map(|s| (t_est - s.t) * p * (q * s.u_probe[k]).exp())
            .fold(f64::INFINITY, f64::min);
        if liminf.is_finite() && liminf >= eta {
            best = best.max(d);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NondegeneracyCriterion {
    pub d1: f64,
    pub d0: f64,
    pub eta: f64,
    pub tau0: f64,
    /// Type-I bound `(T−t)·U ≤ M0` assumed by the criterion.
    pub m0: f64,
}

impl NondegeneracyCriterion {
    /// `d1 = R/2`, `d0 = 3R/4`, `eta = 0.01`, `tau0 = (T_est − t_a)/2`.
    pub fn defaults(radius: f64, est: &BlowupEstimate, m0: f64) -> Self {
        Self {
            d1: radius / 2.0,
            d0: 0.75 * radius,
            eta: DEFAULT_ETA,
            tau0: 0.5 * (est.t_est - est.t_a),
            m0,
        }
    }

    pub fn validate(&self, radius: f64) -> Result<()> {
        if !(0.0 < self.d1 && self.d1 < self.d0 && self.d0 < radius) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < d1 < d0 < R, got d1={}, d0={}, R={radius}",
                self.d1, self.d0
            )));
        }
        if !(self.eta > 0.0 && self.tau0 > 0.0 && self.m0 > 0.0) {
            return Err(Error::InvalidConfig("eta, tau0 and m0 must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub criterion: NondegeneracyCriterion,
    /// Earliest sampled `t1` with `(T−t1)U(t1,d1) ≤ η` or `(T−t1)V(t1,d1) ≤ η`.
    pub t1: Option<f64>,
    /// Prediction that `d0` is not a blow-up point.
    pub d0_not_blowup: bool,
    /// `min` over the window of `(T−t)·U(t,d1)` and `(T−t)·V(t,d1)`.
    pub min_weighted_d1: f64,
    /// `sup` over the window and every probe `≥ d1` of `(T−t)U` and `(T−t)V`.
    pub empirical_m0: f64,
    pub m0_respected: bool,
    /// `u(t_last, d0) − u(t1, d0)` when `t1` exists.
    pub d0_growth_u: Option<f64>,
    pub d0_growth_v: Option<f64>,
}

fn probe(traj: &Trajectory, rho: f64) -> Result<usize> {
    traj.probe_index(rho)
        .ok_or_else(|| Error::InvalidConfig(format!("no probe at radius {rho}; probes are {:?}", traj.probe_radii)))
}

pub fn nondegeneracy_check(traj: &Trajectory, t_est: f64, crit: &NondegeneracyCriterion) -> Result<NondegeneracyReport> {
    crit.validate(traj.grid.radius())?;
    let k1 = probe(traj, crit.d1)?;
    let k0 = probe(traj, crit.d0)?;
    let start = t_est - crit.tau0;
    let first = traj.samples.first().ok_or_else(|| Error::InsufficientData("no samples".into()))?;
    if first.t > start {
        return Err(Error::WindowNotCovered(format!(
            "samples start at {} after window start {start}",
            first.t
        )));
    }
    let (p, q) = (traj.params.p, traj.params.q);
    let window: Vec<&Sample> = traj.samples.iter().filter(|s| s.t >= start && s.t < t_est).collect();
    if window.is_empty() {
        return Err(Error::WindowNotCovered(format!("no samples in [{start}, {t_est})")));
    }
    let outer: Vec<usize> = (0..traj.probe_radii.len())
        .filter(|&k| traj.probe_radii[k] >= crit.d1)
        .collect();
    let mut t1 = None;
    let mut min_d1 = f64::INFINITY;
    let mut m0 = 0.0_f64;
    for s in &window {
        let gap = t_est - s.t;
        let wu = gap * p * (q * s.u_probe[k1]).exp();
        let wv = gap * q * (p * s.v_probe[k1]).exp();
        min_d1 = min_d1.min(wu).min(wv);
        if t1.is_none() && (wu <= crit.eta || wv <= crit.eta) {
            t1 = Some(s.t);
        }
        for &k in &outer {
            m0 = m0
                .max(gap * p * (q * s.u_probe[k]).exp())
                .max(gap * q * (p * s.v_probe[k]).exp());
        }
    }
    let (d0_growth_u, d0_growth_v) = match t1 {
        Some(t1) => {
            let at = traj.samples.iter().find(|s| s.t == t1).unwrap();
            let last = traj.samples.last().unwrap();
            (
                Some(last.u_probe[k0] - at.u_probe[k0]),
                Some(last.v_probe[k0] - at.v_probe[k0]),
            )
        }
        None => (None, None),
    };
    Ok(NondegeneracyReport {
        criterion: *crit,
        t1,
        d0_not_blowup: t1.is_some(),
        min_weighted_d1: min_d1,
        empirical_m0: m0,
        m0_respected: m0 <= crit.m0,
        d0_growth_u,
        d0_growth_v,
    })
}

/// Upper-bound exponents `α_i` for the cyclic power system
/// `∂t u_i − δ_iΔu_i = u_{i+1}^{p_i}`.
pub fn alpha_exponents(p: &[f64]) -> Result<Vec<f64>> {
    let m = p.len();
    if m < 2 {
        return Err(Error::Domain(format!("need at least two exponents, got {m}")));
    }
    if let Some(bad) = p.iter().find(|&&pi| !(pi > 1.0 && pi.is_finite())) {
        return Err(Error::Domain(format!("exponents must exceed 1, got {bad}")));
    }
    let denom = p.iter().product::<f64>() - 1.0;
    Ok((0..m)
        .map(|i| {
            // 1 + p_i + p_i p_{i+1} + … + p_i⋯p_{i+m−2}
            let mut term = 1.0;
            let mut num = 1.0;
            for l in 0..m - 1 {
                term *= p[(i + l) % m];
                num += term;
            }
            num / denom
        })
        .collect())
}

/// `H(X) = ∫_X^∞ ds/(e^{s/2} − 1) = −2·ln(1 − e^{−X/2})`.
pub fn h_function(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("H(X) diverges for X = {x}")));
    }
    Ok(-2.0 * (-(-x / 2.0).exp()).ln_1p())
}

/// Which combination of `(u, v)` is fed to `H`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HOrdering {
    #[default]
    QuPlusPv,
    PuPlusQv,
}

pub fn h_argument(u: f64, v: f64, p: f64, q: f64, ordering: HOrdering) -> f64 {
    match ordering {
        HOrdering::QuPlusPv => q * u + p * v,
        HOrdering::PuPlusQv => p * u + q * v,
    }
}

/// Whether `H(X) ≥ c·(T − t)`.
pub fn pointwise_typei_bound(x: f64, c: f64, t_blowup: f64, t: f64) -> Result<bool> {
    Ok(h_function(x)? >= c * (t_blowup - t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    /// Fitted `α` in `u ~ C (T − t)^{−α}`.
    pub alpha: f64,
    pub t_est: f64,
    pub r2: f64,
    pub samples_used: usize,
}

/// Fits `u/u_t = (T − t)/α`, which is linear in `t` for power-law blow-up.
///
/// Uses samples with `value ≥ min_value`; `u_t` comes from three-point
/// differences on the (nonuniform) sample times.
pub fn fit_power_blowup(times: &[f64], values: &[f64], min_value: f64) -> Result<PowerFit> {
    if times.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            got: values.len(),
        });
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for j in 1..times.len().saturating_sub(1) {
        if values[j] < min_value {
            continue;
        }
        let (h0, h1) = (times[j] - times[j - 1], times[j + 1] - times[j]);
        let d = -h1 / (h0 * (h0 + h1)) * values[j - 1] + (h1 - h0) / (h0 * h1) * values[j]
            + h0 / (h1 * (h0 + h1)) * values[j + 1];
        if d > 0.0 {
            x.push(times[j]);
            y.push(values[j] / d);
        }
    }
    let fit = linear_fit(&x, &y)?;
    if !(fit.slope < 0.0) {
        return Err(Error::InsufficientData("u/u_t is not decreasing; no power-law blow-up".into()));
    }
    Ok(PowerFit {
        alpha: -1.0 / fit.slope,
        t_est: -fit.intercept / fit.slope,
        r2: fit.r2,
        samples_used: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use proptest::prelude::*;

    /// Geometric approach to `T` with ratio `r`, stopped once `q·u` reaches 30.
    fn synthetic(t_blowup: f64, q: f64, r: f64, shape: impl Fn(f64) -> f64) -> Vec<Sample> {
        let mut out = Vec::new();
        let mut gap = t_blowup;
        while shape(gap) <= 30.0 {
            let u = shape(gap) / q;
            out.push(Sample {
                t: t_blowup - gap,
                u_max: u,
                v_max: u,
                u_probe: vec![],
                v_probe: vec![],
            });
            gap *= r;
        }
        out
    }

    #[test]
    fn exact_type_i_series() {
        let s = synthetic(0.5, 2.0, 0.9, |gap| -gap.ln());
        let est = estimate_from_samples(&s, 2.0, 2.0, 30.0, 3).unwrap();
        assert!((est.t_est - 0.5).abs() <= 1e-12, "{}", est.t_est);
        // t carries ~1e-16 rounding against a y spread of ~1e-10.
        assert!((est.r2 - 1.0).abs() <= 1e-10, "{}", 1.0 - est.r2);
        assert!(est.type_i);
        // ln(T − t) at T − t ≈ 1e-13 amplifies the ~1e-16 error in T_est.
        assert!(est.c_type_i_u.abs() < 5e-3, "{}", est.c_type_i_u);
        assert!(est.v_consistent);
    }

    #[test]
    fn non_type_i_series_is_flagged() {
        let s = synthetic(0.5, 1.0, 0.999, |gap| gap.powf(-0.5));
        let est = estimate_from_samples(&s, 1.0, 1.0, 30.0, 1).unwrap();
        assert!(est.r2 < TYPE_I_R2, "r2 = {}", est.r2);
        assert!(!est.type_i);
    }

    #[test]
    fn too_few_late_samples() {
        let s = synthetic(0.5, 1.0, 0.2, |gap| -gap.ln());
        assert!(matches!(
            estimate_from_samples(&s, 1.0, 1.0, 30.0, 1),
            Err(Error::InsufficientData(_))
        ));
    }

    proptest! {
        #[test]
        fn time_shift_equivariance(shift in -5.0f64..5.0, t_blowup in 0.1f64..2.0) {
            let s = synthetic(t_blowup, 1.0, 0.9, |gap| -gap.ln() + 0.3);
            let shifted: Vec<Sample> = s.iter().cloned().map(|mut x| { x.t += shift; x }).collect();
            let a = estimate_from_samples(&s, 1.0, 1.0, 30.0, 2).unwrap();
            let b = estimate_from_samples(&shifted, 1.0, 1.0, 30.0, 2).unwrap();
            prop_assert!((b.t_est - a.t_est - shift).abs() <= 1e-12 * (1.0 + shift.abs()));
        }

        #[test]
        fn equal_exponents_give_scalar_rate(a in 1.0001f64..50.0) {
            let alpha = alpha_exponents(&[a, a]).unwrap();
            let expected = 1.0 / (a - 1.0);
            prop_assert!((alpha[0] - expected).abs() <= 1e-12 * expected.max(1.0));
            prop_assert!((alpha[1] - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_exponents(&[3.0, 3.0]).unwrap(), vec![0.5, 0.5]);
        let a = alpha_exponents(&[2.0, 5.0]).unwrap();
        assert!((a[0] - 1.0 / 3.0).abs() < 1e-15 && (a[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(alpha_exponents(&[2.0, 2.0, 2.0]).unwrap(), vec![1.0; 3]);
        assert!(alpha_exponents(&[1.0, 2.0]).is_err());
        assert!(alpha_exponents(&[2.0]).is_err());
    }

    #[test]
    fn alpha_satisfies_scaling_relation() {
        // α_i + 1 = p_i·α_{i+1} balances u_i' = u_{i+1}^{p_i}.
        let p = [2.0, 3.5, 1.5, 4.0];
        let a = alpha_exponents(&p).unwrap();
        for i in 0..4 {
            assert!((a[i] + 1.0 - p[i] * a[(i + 1) % 4]).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_rotation_exact() {
        // Integer numerators and the common denominator, compared exactly.
        fn rational(p: &[u64]) -> Vec<(u64, u64)> {
            let m = p.len();
            let denom = p.iter().product::<u64>() - 1;
            (0..m)
                .map(|i| {
                    let (mut term, mut num) = (1, 1);
                    for l in 0..m - 1 {
                        term *= p[(i + l) % m];
                        num += term;
                    }
                    (num, denom)
                })
                .collect()
        }
        let p = [2u64, 3, 5, 7];
        let base = rational(&p);
        for r in 1..4 {
            let rotated: Vec<u64> = (0..4).map(|i| p[(i + r) % 4]).collect();
            let out = rational(&rotated);
            for i in 0..4 {
                assert_eq!(out[i], base[(i + r) % 4]);
            }
            let f = alpha_exponents(&rotated.iter().map(|&x| x as f64).collect::<Vec<_>>()).unwrap();
            for i in 0..4 {
                assert_eq!(f[i], out[i].0 as f64 / out[i].1 as f64);
            }
        }
    }

    #[test]
    fn h_closed_form() {
        let x = 2.0 * 4f64.ln();
        assert!((h_function(x).unwrap() - (-2.0 * 0.75f64.ln())).abs() < 1e-15);
        assert!((h_function(x).unwrap() - 0.575_364_144_903_561_8).abs() < 1e-15);
        assert!(h_function(1.0).unwrap() > h_function(2.0).unwrap());
        assert!(h_function(0.0).is_err());
        let big = 60.0;
        assert!((h_function(big).unwrap() / (-big / 2.0).exp() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn h_matches_integral() {
        for x in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let tail = integrate(|s: f64| 1.0 / (s / 2.0).exp_m1(), x, x + 120.0, 1e-14, 0.0).unwrap();
            assert!((tail.value - h_function(x).unwrap()).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn h_orderings() {
        assert_eq!(h_argument(1.0, 2.0, 3.0, 5.0, HOrdering::QuPlusPv), 11.0);
        assert_eq!(h_argument(1.0, 2.0, 3.0, 5.0, HOrdering::PuPlusQv), 13.0);
        assert!(pointwise_typei_bound(1.0, 1.0, 1.0, 0.5).unwrap());
    }

    #[test]
    fn power_fit_recovers_exponent() {
        let (t_blowup, alpha) = (0.7, 0.5);
        let times: Vec<f64> = (0..300).map(|k| t_blowup * (1.0 - 0.97f64.powi(k))).collect();
        let values: Vec<f64> = times.iter().map(|t| 3.0 * (t_blowup - t).powf(-alpha)).collect();
        let fit = fit_power_blowup(&times, &values, 10.0).unwrap();
        assert!((fit.alpha - alpha).abs() < 1e-3, "{fit:?}");
        assert!((fit.t_est - t_blowup).abs() < 1e-4);
    }

    fn probe_traj(probe_u: impl Fn(f64, f64) -> f64) -> Trajectory {
        use crate::grid::RadialGrid;
        use crate::model::{BoundaryCondition, ModelParams, Variant};
        let params = ModelParams::new(1.0, 1.0, 1.0, 1.0, Variant::Exp, 1, 1.0, BoundaryCondition::Neumann).unwrap();
        let radii = vec![0.0, 0.125, 0.25, 0.5, 0.75];
        let samples = synthetic(1.0, 1.0, 0.95, |gap| -gap.ln())
            .into_iter()
            .map(|mut s| {
                s.u_probe = radii.iter().map(|&d| probe_u(s.t, d)).collect();
                s.v_probe = s.u_probe.clone();
                s
            })
            .collect();
        Trajectory {
            params,
            grid: RadialGrid::new(1.0, 16).unwrap(),
            amplitude_cap: 30.0,
            probe_radii: radii,
            samples,
            checkpoints: vec![],
            stop: StopReason::AmplitudeCap,
            t_stop: 1.0,
        }
    }

    #[test]
    fn flat_run_blows_up_everywhere() {
        let traj = probe_traj(|t, _| -(1.0 - t).ln());
        assert_eq!(blowup_set_radius(&traj, 1.0, 0.5, DEFAULT_ETA), 0.75);
    }

    #[test]
    fn frozen_probes_do_not_blow_up() {
        let traj = probe_traj(|t, d| if d == 0.0 { -(1.0 - t).ln() } else { 2.0 });
        assert_eq!(blowup_set_radius(&traj, 1.0, 0.5, DEFAULT_ETA), 0.0);
    }

    proptest! {
        #[test]
        fn radius_nonincreasing_in_eta(e1 in 1e-6f64..10.0, k in 1.0f64..100.0, decay in 0.0f64..3.0) {
            let traj = probe_traj(|t, d| -(1.0 - t).ln() * (1.0 - decay * d / 3.0));
            prop_assert!(blowup_set_radius(&traj, 1.0, 0.5, e1 * k) <= blowup_set_radius(&traj, 1.0, 0.5, e1));
        }
    }

    #[test]
    fn nondegeneracy_on_flat_run() {
        let traj = probe_traj(|t, _| -(1.0 - t).ln());
        let crit = NondegeneracyCriterion { d1: 0.5, d0: 0.75, eta: 0.5, tau0: 0.5, m0: 2.0 };
        let r = nondegeneracy_check(&traj, 1.0, &crit).unwrap();
        assert!(r.t1.is_none() && !r.d0_not_blowup);
        assert!((r.empirical_m0 - 1.0).abs() < 1e-9);
        assert!(r.m0_respected);
    }

    #[test]
    fn nondegeneracy_returns_earliest_sample() {
        let eta = 0.01;
        // (T − t)·e^{u(t,d1)} ≡ eta/2.
        let traj = probe_traj(|t, d| if d == 0.5 { (eta / 2.0 / (1.0 - t)).ln() } else { 0.0 });
        let crit = NondegeneracyCriterion { d1: 0.5, d0: 0.75, eta, tau0: 0.5, m0: 2.0 };
        let r = nondegeneracy_check(&traj, 1.0, &crit).unwrap();
        let first_in_window = traj.samples.iter().find(|s| s.t >= 0.5).unwrap().t;
        assert_eq!(r.t1, Some(first_in_window));
        assert!(r.d0_not_blowup);
        assert_eq!(r.d0_growth_u, Some(0.0));
    }

    #[test]
    fn nondegeneracy_errors() {
        let traj = probe_traj(|t, _| -(1.0 - t).ln());
        let late = NondegeneracyCriterion { d1: 0.5, d0: 0.75, eta: 0.01, tau0: 2.0, m0: 1.0 };
        assert!(matches!(nondegeneracy_check(&traj, 1.0, &late), Err(Error::WindowNotCovered(_))));
        let bad = NondegeneracyCriterion { d1: 0.75, d0: 0.5, ..late };
        assert!(nondegeneracy_check(&traj, 1.0, &bad).is_err());
        let missing = NondegeneracyCriterion { d1: 0.3, d0: 0.75, tau0: 0.5, ..late };
        assert!(nondegeneracy_check(&traj, 1.0, &missing).is_err());
    }
}

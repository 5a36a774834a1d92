//! Globally adaptive 7-point Gauss / 15-point Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Maximum number of live subintervals.
pub const MAX_INTERVALS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Sum of per-interval `|Kronrod − Gauss|` differences.
    pub abs_err: f64,
    pub intervals: usize,
}

/// One G7K15 panel: (Kronrod value, |Kronrod − Gauss|).
fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = half * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * half, ((k - g) * half).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// `∫_a^b f` to `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Estimate> {
    integrate_breaks(f, &[a, b], abs_tol, rel_tol)
}

/// Same as [`integrate`] over `[breaks[0], breaks[last]]`, with the initial
/// partition at the given (sorted) breakpoints.
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    if breaks.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Domain("breakpoints must be sorted".into()));
    }
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, e) = panel(&f, w[0], w[1]);
        total += value;
        err += e;
        heap.push(Piece { a: w[0], b: w[1], value, err: e });
    }
    loop {
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol {
            break;
        }
        if !err.is_finite() || heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { tol, estimate: err });
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Width at machine resolution; the remaining error is irreducible.
            return Err(Error::Quadrature { tol, estimate: err });
        }
        let (v1, e1) = panel(&f, worst.a, mid);
        let (v2, e2) = panel(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.err;
        heap.push(Piece { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // Re-sum to drop the drift of the running totals.
    let intervals = heap.len();
    let (value, abs_err) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
    Ok(Estimate { value, abs_err, intervals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let e = integrate(|x| x.powi(9) - 3.0 * x * x, 0.0, 2.0, 0.0, 1e-12).unwrap();
        assert!((e.value - (102.4 - 8.0)).abs() < 1e-12);
        assert_eq!(e.intervals, 1);
    }

    #[test]
    fn gaussian_mass() {
        let e = integrate(|x| (-x * x).exp(), -10.0, 10.0, 1e-14, 0.0).unwrap();
        assert!((e.value - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn kinked_integrand_with_breaks() {
        let e = integrate_breaks(|x: f64| x.abs(), &[-1.0, 0.0, 2.0], 1e-14, 0.0).unwrap();
        assert!((e.value - 2.5).abs() < 1e-14);
        let e = integrate(|x: f64| x.abs(), -1.0, 2.0, 1e-12, 0.0).unwrap();
        assert!((e.value - 2.5).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let e = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, 1e-9, 0.0).unwrap();
        assert!((e.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn nonintegrable_fails() {
        assert!(matches!(
            integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-10, 0.0),
            Err(Error::Quadrature { .. })
        ));
    }
}

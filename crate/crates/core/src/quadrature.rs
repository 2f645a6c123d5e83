//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of an integration, converged or not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Quadrature {
    /// The value, or `QuadratureFailure` carrying the error estimate.
    pub fn into_result(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::QuadratureFailure { error_bound: self.error_estimate })
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 2000 }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// `∫_a^b f` over a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadratureOptions) -> Quadrature {
    integrate_breakpoints(f, &[a, b], opts)
}

/// `∫ f` over `[points[0], points.last()]`, with the interior points as
/// initial subdivision (use them for kinks and singularities).
pub fn integrate_breakpoints<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: QuadratureOptions) -> Quadrature {
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    for w in points.windows(2) {
        let (v, e) = gk15(&f, w[0], w[1]);
        evaluations += 15;
        value += v;
        error += e;
        heap.push(Segment { a: w[0], b: w[1], value: v, error: e });
    }
    let tolerance = |value: f64| opts.abs_tol.max(opts.rel_tol * value.abs());
    while error > tolerance(value) && heap.len() < opts.max_intervals {
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval below machine resolution
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // re-sum to shed the drift from incremental updates
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    let converged = value.is_finite() && error <= tolerance(value);
    Quadrature { value, error_estimate: error, evaluations, converged }
}

/// `∫_a^∞ f` through the map `x = a + s/(1-s)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, opts: QuadratureOptions) -> Quadrature {
    let g = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - s;
        let x = a + s / one_minus;
        let v = f(x) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let q = integrate(|x| x * x, 0.0, 1.0, QuadratureOptions::default());
        assert!(q.converged);
        assert!((q.value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(q.evaluations, 15);
    }

    #[test]
    fn endpoint_singularity() {
        let q = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, QuadratureOptions::default());
        assert!(q.converged, "{q:?}");
        assert!((q.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite() {
        let q = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, QuadratureOptions::default());
        assert!((q.value - 1.0).abs() < 1e-12);
        let q = integrate_to_infinity(|x: f64| 1.0 / (1.0 + x * x), 0.0, QuadratureOptions::default());
        assert!((q.value - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn breakpoints_and_failure() {
        let q = integrate_breakpoints(|x: f64| x.abs(), &[-1.0, 0.0, 2.0], QuadratureOptions::default());
        assert!((q.value - 2.5).abs() < 1e-14);
        let opts = QuadratureOptions { max_intervals: 3, ..Default::default() };
        let q = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, opts);
        assert!(!q.converged);
        assert!(matches!(q.into_result(), Err(Error::QuadratureFailure { .. })));
    }
}

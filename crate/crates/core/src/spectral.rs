//! Energy distributions of states and their tail behaviour.
//!
//! A [`SpectralMeasure`] is either the discrete distribution of a state
//! over the eigenvalues of a Hamiltonian or one of a few analytic families.
//! The characteristic function uses the `e^{-itx}` sign, so for a measure
//! built from `(H, ψ)` it is the complex conjugate of the survival
//! amplitude.
//!
//! The tail functional `δ_F(x) = x (F(-x) + 1 - F(x))` decides between the
//! Zeno and anti-Zeno limits: Zeno when it tends to zero, anti-Zeno when it
//! diverges (for straight distributions).

use std::f64::consts::{FRAC_1_PI, FRAC_PI_2, PI, SQRT_2};

use rand::Rng;
use rand_distr::{Cauchy as CauchyDistribution, Distribution, Normal};
use rayon::prelude::*;

use crate::ensemble::seeded_rng;
use crate::error::{Error, Result};
use crate::fit::{line_fit, logspace};
use crate::operator::{CVector, HermitianOperator, C64};
use crate::quadrature::{integrate, integrate_breakpoints, Quadrature, QuadratureOptions};
use crate::survival::{ensure_normalized, Extended};

/// Atoms `(λ, w)` with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

impl DiscreteMeasure {
    /// Sorts and merges identical locations.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("discrete measure needs at least one atom"));
        }
        if atoms.iter().any(|&(l, w)| !l.is_finite() || !(w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("atoms need finite locations and positive weights"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm: total });
        }
        Ok(Self::from_sorted(merge_atoms(atoms, 0.0)))
    }

    fn from_sorted(atoms: Vec<(f64, f64)>) -> Self {
        let mut acc = 0.0;
        let cumulative = atoms
            .iter()
            .map(|a| {
                acc += a.1;
                acc
            })
            .collect();
        Self { atoms, cumulative }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    fn cdf(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.0 <= x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1].min(1.0)
        }
    }

    fn tail(&self, x: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 <= -x || a.0 > x).map(|a| a.1).sum()
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let total = *self.cumulative.last().expect("nonempty");
        let u = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
        self.atoms[k].0
    }

    /// `1 - |φ(t)|²` as a sum of squared sines.
    fn modulus_defect(&self, t: f64) -> f64 {
        let n = self.atoms.len();
        let mut acc = 0.0;
        for j in 0..n {
            for k in (j + 1)..n {
                let s = (0.5 * t * (self.atoms[j].0 - self.atoms[k].0)).sin();
                acc += 4.0 * self.atoms[j].1 * self.atoms[k].1 * s * s;
            }
        }
        acc.clamp(0.0, 1.0)
    }
}

/// Sorts atoms and merges neighbours closer than `gap` (inclusive).
fn merge_atoms(mut atoms: Vec<(f64, f64)>, gap: f64) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(atoms.len());
    for (l, w) in atoms {
        match merged.last_mut() {
            Some(last) if l - last.2 <= gap => {
                last.0 += l * w;
                last.1 += w;
                last.2 = l;
            }
            _ => merged.push((l * w, w, l)),
        }
    }
    merged.into_iter().map(|(lw, w, _)| (lw / w, w)).collect()
}

/// Analytic distribution families.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    PointMass { at: f64 },
    Gaussian { mean: f64, std_dev: f64 },
    Cauchy { location: f64, scale: f64 },
    /// Symmetric law with `Pr(|X| > x) = (scale/x)^α` for `x ≥ scale`, `0 < α < 2`.
    TwoSidedPareto { alpha: f64, scale: f64 },
    /// Weighted components; weights sum to one.
    Mixture(Vec<(f64, Family)>),
}

/// Standard Cauchy `Pr(Z > z)`, accurate in both tails.
fn cauchy_upper(z: f64) -> f64 {
    if z > 0.0 {
        FRAC_1_PI * (1.0 / z).atan()
    } else {
        0.5 - FRAC_1_PI * z.atan()
    }
}

/// `Γ(1-α) cos(πα/2) / α = ∫_0^∞ (1 - cos y) y^{-α-1} dy`.
fn pareto_constant(alpha: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-8 {
        FRAC_PI_2
    } else {
        libm::tgamma(1.0 - alpha) * (FRAC_PI_2 * alpha).cos() / alpha
    }
}

const SERIES_LIMIT: f64 = 2.0;
const CONTOUR_LENGTH: f64 = 50.0;

/// `1 - φ(u)` for the two-sided Pareto law at `a = scale·|u|`.
///
/// Small `a` uses `α a^α K_α` minus the even power series of the truncated
/// integral; large `a` rotates the oscillatory tail integral onto the
/// imaginary direction, where it decays like `e^{-s}`.
fn pareto_defect(alpha: f64, a: f64) -> (f64, Option<Quadrature>) {
    if a == 0.0 {
        return (0.0, None);
    }
    if a <= SERIES_LIMIT {
        let a2 = a * a;
        let mut term = 1.0;
        let mut series = 0.0;
        for k in 1..60 {
            let kf = k as f64;
            term *= a2 / ((2.0 * kf - 1.0) * (2.0 * kf));
            let contribution = term / (2.0 * kf - alpha);
            series += if k % 2 == 1 { contribution } else { -contribution };
            if contribution < 1e-18 * series.abs() {
                break;
            }
        }
        return (alpha * (a.powf(alpha) * pareto_constant(alpha) - series), None);
    }
    let beta = alpha + 1.0;
    let integrand = |s: f64| C64::new(a, s).powf(-beta) * (-s).exp();
    let opts = QuadratureOptions { abs_tol: 1e-16 * a.powf(-beta), rel_tol: 1e-13, max_intervals: 400 };
    let re = integrate(|s| integrand(s).re, 0.0, CONTOUR_LENGTH, opts);
    let im = integrate(|s| integrand(s).im, 0.0, CONTOUR_LENGTH, opts);
    let tail = C64::new(0.0, 1.0) * C64::new(0.0, a).exp() * C64::new(re.value, im.value);
    let phi = alpha * a.powf(alpha) * tail.re;
    let worst = if re.converged { im } else { re };
    (1.0 - phi, Some(worst))
}

fn check_defect(d: (f64, Option<Quadrature>)) -> Result<f64> {
    match d.1 {
        Some(q) if !q.converged => Err(Error::QuadratureFailure { error_bound: q.error_estimate }),
        _ => Ok(d.0),
    }
}

fn ln_modulus_from_defect(d: f64) -> f64 {
    // φ = 1 - d is real here
    if d < 0.5 {
        (-d).ln_1p()
    } else {
        (1.0 - d).abs().ln()
    }
}

impl Family {
    fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        let ok = match self {
            Family::PointMass { at } => finite(*at),
            Family::Gaussian { mean, std_dev } => finite(*mean) && finite(*std_dev) && *std_dev > 0.0,
            Family::Cauchy { location, scale } => finite(*location) && finite(*scale) && *scale > 0.0,
            Family::TwoSidedPareto { alpha, scale } => *alpha > 0.0 && *alpha < 2.0 && finite(*scale) && *scale > 0.0,
            Family::Mixture(parts) => {
                if parts.is_empty() || parts.iter().any(|(w, _)| !(*w > 0.0 && w.is_finite())) {
                    false
                } else {
                    let total: f64 = parts.iter().map(|p| p.0).sum();
                    if (total - 1.0).abs() > 1e-12 {
                        return Err(Error::NotNormalized { norm: total });
                    }
                    for (_, f) in parts {
                        f.validate()?;
                    }
                    true
                }
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid distribution parameters: {self:?}")))
        }
    }

    /// `Pr(X > y)`.
    fn upper(&self, y: f64) -> f64 {
        match self {
            Family::PointMass { at } => f64::from(u8::from(*at > y)),
            Family::Gaussian { mean, std_dev } => 0.5 * libm::erfc((y - mean) / (std_dev * SQRT_2)),
            Family::Cauchy { location, scale } => cauchy_upper((y - location) / scale),
            Family::TwoSidedPareto { alpha, scale } => {
                if y >= *scale {
                    0.5 * (scale / y).powf(*alpha)
                } else if y >= -scale {
                    0.5
                } else {
                    1.0 - 0.5 * (scale / -y).powf(*alpha)
                }
            }
            Family::Mixture(parts) => parts.iter().map(|(w, f)| w * f.upper(y)).sum(),
        }
    }

    /// `Pr(X ≤ y)`.
    fn lower(&self, y: f64) -> f64 {
        match self {
            Family::PointMass { at } => f64::from(u8::from(*at <= y)),
            Family::Gaussian { mean, std_dev } => 0.5 * libm::erfc((mean - y) / (std_dev * SQRT_2)),
            Family::Cauchy { location, scale } => cauchy_upper((location - y) / scale),
            Family::TwoSidedPareto { .. } => self.upper(-y),
            Family::Mixture(parts) => parts.iter().map(|(w, f)| w * f.lower(y)).sum(),
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Family::PointMass { at } => *at,
            Family::Gaussian { mean, std_dev } => Normal::new(*mean, *std_dev).expect("validated").sample(rng),
            Family::Cauchy { location, scale } => {
                CauchyDistribution::new(*location, *scale).expect("validated").sample(rng)
            }
            Family::TwoSidedPareto { alpha, scale } => {
                let u = 1.0 - rng.random::<f64>();
                let magnitude = scale * u.powf(-1.0 / alpha);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
            Family::Mixture(parts) => {
                let mut u = rng.random::<f64>();
                for (w, f) in parts {
                    if u < *w {
                        return f.sample(rng);
                    }
                    u -= w;
                }
                parts.last().expect("validated").1.sample(rng)
            }
        }
    }

    fn characteristic(&self, t: f64) -> C64 {
        match self {
            Family::PointMass { at } => C64::new(0.0, -t * at).exp(),
            Family::Gaussian { mean, std_dev } => {
                C64::new(-0.5 * (std_dev * t).powi(2), -t * mean).exp()
            }
            Family::Cauchy { location, scale } => C64::new(-scale * t.abs(), -t * location).exp(),
            Family::TwoSidedPareto { alpha, scale } => C64::new(1.0 - pareto_defect(*alpha, scale * t.abs()).0, 0.0),
            Family::Mixture(parts) => parts.iter().map(|(w, f)| f.characteristic(t) * *w).sum(),
        }
    }

    fn ln_modulus(&self, t: f64) -> Result<f64> {
        Ok(match self {
            Family::PointMass { .. } => 0.0,
            Family::Gaussian { std_dev, .. } => -0.5 * (std_dev * t).powi(2),
            Family::Cauchy { scale, .. } => -scale * t.abs(),
            Family::TwoSidedPareto { alpha, scale } => {
                ln_modulus_from_defect(check_defect(pareto_defect(*alpha, scale * t.abs()))?)
            }
            Family::Mixture(parts) => {
                let mut phi = C64::new(0.0, 0.0);
                for (w, f) in parts {
                    if let Family::TwoSidedPareto { alpha, scale } = f {
                        check_defect(pareto_defect(*alpha, scale * t.abs()))?;
                    }
                    phi += f.characteristic(t) * *w;
                }
                phi.norm().ln()
            }
        })
    }

    /// Power-law exponent of `Pr(|X| > x)`; `None` when lighter than any power.
    fn tail_exponent(&self) -> Option<f64> {
        match self {
            Family::PointMass { .. } | Family::Gaussian { .. } => None,
            Family::Cauchy { .. } => Some(1.0),
            Family::TwoSidedPareto { alpha, .. } => Some(*alpha),
            Family::Mixture(parts) => parts
                .iter()
                .filter_map(|(_, f)| f.tail_exponent())
                .min_by(|a, b| a.total_cmp(b)),
        }
    }

    fn first_abs_moment(&self, tail: &dyn Fn(f64) -> f64) -> Result<Extended> {
        if self.tail_exponent().is_some_and(|e| e <= 1.0) {
            return Ok(Extended::Infinite);
        }
        let opts = QuadratureOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 2000 };
        match self {
            Family::PointMass { at } => Ok(Extended::Finite(at.abs())),
            Family::Gaussian { mean, std_dev } => {
                // the tail is below 1e-300 past 40 standard deviations
                let cutoff = mean.abs() + 40.0 * std_dev;
                let mut points = vec![0.0, cutoff];
                if mean.abs() > 0.0 {
                    points.insert(1, mean.abs());
                }
                Ok(Extended::Finite(integrate_breakpoints(tail, &points, opts).into_result()?))
            }
            Family::TwoSidedPareto { alpha, scale } => {
                let cutoff = 1e3 * scale;
                let body = integrate_breakpoints(tail, &[0.0, *scale, cutoff], opts).into_result()?;
                let continuation = scale.powf(*alpha) * cutoff.powf(1.0 - alpha) / (alpha - 1.0);
                Ok(Extended::Finite(body + continuation))
            }
            Family::Cauchy { .. } => Ok(Extended::Infinite),
            Family::Mixture(parts) => {
                let mut total = 0.0;
                for (w, f) in parts {
                    let component = SpectralMeasure::Analytic(f.clone());
                    match f.first_abs_moment(&|x| component.tail(x))? {
                        Extended::Finite(m) => total += w * m,
                        Extended::Infinite => return Ok(Extended::Infinite),
                    }
                }
                Ok(Extended::Finite(total))
            }
        }
    }
}

/// Probability distribution on the real line.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralMeasure {
    Discrete(DiscreteMeasure),
    Analytic(Family),
}

const CDF_PROBE: f64 = 1e8;
/// Mass allowed beyond `±1e8` when probing the cdf limits.
pub const CDF_PROBE_TOLERANCE: f64 = 1e-2;

impl SpectralMeasure {
    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Self::Discrete(DiscreteMeasure::new(atoms)?))
    }

    /// Validates parameters, then probes the cdf for monotonicity and its limits.
    pub fn analytic(family: Family) -> Result<Self> {
        family.validate()?;
        let measure = Self::Analytic(family);
        let mut probes: Vec<f64> = logspace(1e-3, CDF_PROBE, 45).into_iter().rev().map(|x| -x).collect();
        probes.push(0.0);
        probes.extend(logspace(1e-3, CDF_PROBE, 45));
        let values: Vec<f64> = probes.iter().map(|&x| measure.cdf(x)).collect();
        if values.windows(2).any(|w| w[1] < w[0] - 1e-15) {
            return Err(Error::invalid("cdf is not nondecreasing"));
        }
        if values[0] > CDF_PROBE_TOLERANCE || values[values.len() - 1] < 1.0 - CDF_PROBE_TOLERANCE {
            return Err(Error::invalid("cdf does not reach its limits within the probe range"));
        }
        Ok(measure)
    }

    pub fn point_mass(at: f64) -> Result<Self> {
        Self::analytic(Family::PointMass { at })
    }

    pub fn gaussian(mean: f64, std_dev: f64) -> Result<Self> {
        Self::analytic(Family::Gaussian { mean, std_dev })
    }

    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        Self::analytic(Family::Cauchy { location, scale })
    }

    pub fn pareto(alpha: f64, scale: f64) -> Result<Self> {
        Self::analytic(Family::TwoSidedPareto { alpha, scale })
    }

    pub fn mixture(parts: Vec<(f64, Family)>) -> Result<Self> {
        Self::analytic(Family::Mixture(parts))
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::Discrete(_))
    }

    /// `F(x) = Pr(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Discrete(d) => d.cdf(x),
            Self::Analytic(f) => f.lower(x),
        }
    }

    /// `F(-x) + 1 - F(x)`, evaluated without cancellation.
    pub fn tail(&self, x: f64) -> f64 {
        match self {
            Self::Discrete(d) => d.tail(x),
            Self::Analytic(f) => (f.lower(-x) + f.upper(x)).min(1.0),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Self::Discrete(d) => d.sample(rng),
            Self::Analytic(f) => f.sample(rng),
        }
    }

    pub fn median(&self) -> f64 {
        match self {
            Self::Discrete(d) => {
                let k = d.cumulative.partition_point(|&c| c < 0.5).min(d.atoms.len() - 1);
                d.atoms[k].0
            }
            Self::Analytic(Family::PointMass { at }) => *at,
            Self::Analytic(Family::Gaussian { mean, .. }) => *mean,
            Self::Analytic(Family::Cauchy { location, .. }) => *location,
            Self::Analytic(Family::TwoSidedPareto { .. }) => 0.0,
            Self::Analytic(Family::Mixture(_)) => {
                let (mut lo, mut hi) = (-1e12, 1e12);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < 0.5 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// `ln |φ(t)|`, accurate when `|φ|` is close to one.
    pub fn ln_modulus(&self, t: f64) -> Result<f64> {
        match self {
            Self::Discrete(d) => Ok(0.5 * (-d.modulus_defect(t)).ln_1p()),
            Self::Analytic(f) => f.ln_modulus(t),
        }
    }

    /// Power-law exponent of the tail, `None` for light tails.
    pub fn tail_exponent(&self) -> Option<f64> {
        match self {
            Self::Discrete(_) => None,
            Self::Analytic(f) => f.tail_exponent(),
        }
    }
}

/// Energy distribution of `ψ` in the eigenbasis of `H`; eigenvalues closer
/// than `1e-10·‖H‖` are merged.
pub fn spectral_measure_of_state(h: &HermitianOperator, psi: &CVector) -> Result<SpectralMeasure> {
    crate::operator::ensure_dim(h.dim(), psi.len())?;
    ensure_normalized(psi)?;
    let coeffs = h.eigenvectors().adjoint() * psi;
    let mut atoms: Vec<(f64, f64)> = h
        .eigenvalues()
        .iter()
        .zip(coeffs.iter())
        .map(|(&l, c)| (l, c.norm_sqr()))
        .filter(|a| a.1 > 0.0)
        .collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    atoms.iter_mut().for_each(|a| a.1 /= total);
    let merged = merge_atoms(atoms, 1e-10 * h.norm());
    Ok(SpectralMeasure::Discrete(DiscreteMeasure::from_sorted(merged)))
}

/// `φ(t) = ∫ e^{-itx} dF(x)`.
pub fn characteristic_fn(measure: &SpectralMeasure, t: f64) -> C64 {
    match measure {
        SpectralMeasure::Discrete(d) => d.atoms.iter().map(|&(l, w)| C64::new(0.0, -t * l).exp() * w).sum(),
        SpectralMeasure::Analytic(f) => f.characteristic(t),
    }
}

/// Zeno, anti-Zeno or neither, from the tail functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Zeno,
    AntiZeno,
    Borderline,
    Indeterminate,
}

/// Thresholds applied by [`classify_regime`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    /// Zeno needs `δ(x_max)` below this ...
    pub zeno_delta: f64,
    /// ... and a top-decade slope below this.
    pub zeno_slope: f64,
    /// Anti-Zeno needs `δ(x_max)` above this and slope above `anti_zeno_slope`.
    pub anti_zeno_delta: f64,
    pub anti_zeno_slope: f64,
    /// Log-log fits with a larger RMS residual are indeterminate.
    pub max_residual: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { zeno_delta: 0.01, zeno_slope: -0.1, anti_zeno_delta: 1.0, anti_zeno_slope: 0.1, max_residual: 0.5 }
    }
}

/// Log-log fit of `δ_F` over the top decade of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendFit {
    pub slope: f64,
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub x_grid: Vec<f64>,
    pub delta_values: Vec<f64>,
    /// `None` when fewer than two positive values lie in the top decade.
    pub trend: Option<TrendFit>,
    pub classification: Option<Regime>,
    pub thresholds: RegimeThresholds,
}

/// Grid used by the scenarios: `10^-2 .. 10^6`, twenty points per decade.
pub fn default_x_grid() -> Vec<f64> {
    logspace(1e-2, 1e6, 161)
}

fn top_decade(x_grid: &[f64]) -> usize {
    let x_max = *x_grid.last().expect("nonempty grid");
    x_grid.partition_point(|&x| x < x_max / 10.0 * (1.0 - 1e-12))
}

fn trend_fit(x_grid: &[f64], delta: &[f64]) -> Option<TrendFit> {
    let start = top_decade(x_grid);
    let (xs, ys): (Vec<f64>, Vec<f64>) = x_grid[start..]
        .iter()
        .zip(&delta[start..])
        .filter(|(_, d)| **d > 0.0)
        .map(|(x, d)| (x.ln(), d.ln()))
        .unzip();
    let fit = line_fit(&xs, &ys)?;
    Some(TrendFit { slope: fit.slope, residual: fit.rms, points: xs.len() })
}

/// `δ_F(x) = x (F(-x) + 1 - F(x))` on the grid, with its top-decade trend.
pub fn tail_delta_curve(measure: &SpectralMeasure, x_grid: &[f64]) -> Result<TailReport> {
    if x_grid.is_empty() || x_grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) || x_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("x grid must be positive and strictly increasing"));
    }
    let delta_values: Vec<f64> = x_grid.iter().map(|&x| x * measure.tail(x)).collect();
    let trend = trend_fit(x_grid, &delta_values);
    Ok(TailReport {
        x_grid: x_grid.to_vec(),
        delta_values,
        trend,
        classification: None,
        thresholds: RegimeThresholds::default(),
    })
}

/// Classifies a sampled tail functional.
///
/// A curve that vanishes at the right end, or decreases monotonically through
/// the top decade to below the Zeno threshold, is Zeno; a superexponentially
/// small tail fits a line poorly, so the residual gate applies only to the
/// other outcomes.
pub fn classify_curve(x_grid: &[f64], delta: &[f64], thresholds: &RegimeThresholds) -> Regime {
    let last = *delta.last().expect("nonempty curve");
    if last == 0.0 {
        return Regime::Zeno;
    }
    let Some(trend) = trend_fit(x_grid, delta) else {
        return Regime::Indeterminate;
    };
    let start = top_decade(x_grid);
    let monotone = delta[start..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    if monotone && last < thresholds.zeno_delta && trend.slope < thresholds.zeno_slope {
        return Regime::Zeno;
    }
    if trend.residual > thresholds.max_residual {
        return Regime::Indeterminate;
    }
    if trend.slope > thresholds.anti_zeno_slope && last > thresholds.anti_zeno_delta {
        Regime::AntiZeno
    } else if trend.slope.abs() <= thresholds.anti_zeno_slope {
        Regime::Borderline
    } else {
        Regime::Indeterminate
    }
}

/// Grids must span at least this many decades.
pub const MIN_DECADES: f64 = 3.0;

pub fn classify_regime(measure: &SpectralMeasure, x_grid: &[f64]) -> Result<TailReport> {
    let mut report = tail_delta_curve(measure, x_grid)?;
    let span = (x_grid[x_grid.len() - 1] / x_grid[0]).log10();
    if span < MIN_DECADES - 1e-9 {
        return Err(Error::invalid(format!("x grid spans {span:.3} decades, need {MIN_DECADES}")));
    }
    if x_grid.len() - top_decade(x_grid) < 3 {
        return Err(Error::invalid("x grid needs at least three points in its top decade"));
    }
    report.classification = Some(classify_curve(&report.x_grid, &report.delta_values, &report.thresholds));
    Ok(report)
}

/// `(n, |φ(t/n)|^{2n})` for each `n`.
pub fn zeno_modulus_table(measure: &SpectralMeasure, t: f64, n_values: &[u64]) -> Result<Vec<(u64, f64)>> {
    n_values
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::invalid("n must be positive"));
            }
            let nf = n as f64;
            Ok((n, (2.0 * nf * measure.ln_modulus(t / nf)?).exp()))
        })
        .collect()
}

/// Smallest power of two `n ≤ n_max` with `|φ(t/n)|^{2n} < threshold`.
pub fn modulus_decay_n(measure: &SpectralMeasure, t: f64, threshold: f64, n_max: u64) -> Result<Option<u64>> {
    let mut n = 1u64;
    while n <= n_max {
        if zeno_modulus_table(measure, t, &[n])?[0].1 < threshold {
            return Ok(Some(n));
        }
        n *= 2;
    }
    Ok(None)
}

/// Tolerances for the law-of-large-numbers statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlnParams {
    /// Half-width for the exceedance `Pr(|mean - μ| > ε)`.
    pub epsilon: f64,
    /// Half-width for the containment `Pr(|mean - μ| ≤ c)`.
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlnRow {
    pub n: u64,
    /// Empirical median of the sample means (the centering for exceedance).
    pub median: f64,
    /// Fraction of means farther than `ε` from the median.
    pub exceedance: f64,
    /// Largest fraction of means inside any window of width `2c`.
    pub containment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlnReport {
    pub rows: Vec<LlnRow>,
    pub trials: usize,
    pub seed: u64,
    pub params: LlnParams,
}

pub const MIN_TRIALS: usize = 1000;

/// Monte Carlo distribution of the empirical mean of `n` samples.
///
/// Each `(n index, trial)` pair draws from its own stream, so results do not
/// depend on scheduling.
pub fn lln_mc(
    measure: &SpectralMeasure,
    n_values: &[u64],
    trials: usize,
    seed: u64,
    params: LlnParams,
) -> Result<LlnReport> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!("need at least {MIN_TRIALS} trials")));
    }
    if !(params.epsilon > 0.0 && params.c > 0.0) {
        return Err(Error::invalid("epsilon and c must be positive"));
    }
    let rows = n_values
        .iter()
        .enumerate()
        .map(|(index, &n)| {
            if n == 0 {
                return Err(Error::invalid("n must be positive"));
            }
            let mut means: Vec<f64> = (0..trials as u64)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = seeded_rng(seed, ((index as u64) << 32) | trial);
                    (0..n).map(|_| measure.sample(&mut rng)).sum::<f64>() / n as f64
                })
                .collect();
            means.sort_by(f64::total_cmp);
            let median = if trials % 2 == 1 {
                means[trials / 2]
            } else {
                0.5 * (means[trials / 2 - 1] + means[trials / 2])
            };
            let exceed = means.iter().filter(|m| (*m - median).abs() > params.epsilon).count();
            let mut best = 0;
            let mut left = 0;
            for right in 0..trials {
                while means[right] - means[left] > 2.0 * params.c {
                    left += 1;
                }
                best = best.max(right - left + 1);
            }
            Ok(LlnRow {
                n,
                median,
                exceedance: exceed as f64 / trials as f64,
                containment: best as f64 / trials as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LlnReport { rows, trials, seed, params })
}

/// Monte Carlo estimates at one `x` of
/// `½Pr(|X'| > x + a) ≤ Pr(|X' - X''| > x) ≤ 2Pr(|X'| > x/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetrizationRow {
    pub x: f64,
    pub a: f64,
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub lower_se: f64,
    pub middle_se: f64,
    pub upper_se: f64,
    /// Both inequalities hold within three combined standard errors.
    pub holds: bool,
}

/// Checks the symmetrization inequalities with `a = |median|`.
pub fn symmetrization_check(
    measure: &SpectralMeasure,
    xs: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<SymmetrizationRow>> {
    if samples < MIN_TRIALS {
        return Err(Error::invalid(format!("need at least {MIN_TRIALS} samples")));
    }
    let draw = |stream: u64| -> Vec<f64> {
        let mut rng = seeded_rng(seed, stream);
        (0..samples).map(|_| measure.sample(&mut rng)).collect()
    };
    let (single, first, second) = (draw(0), draw(1), draw(2));
    let a = measure.median().abs();
    let frac = |count: usize| count as f64 / samples as f64;
    let se = |p: f64| (p * (1.0 - p) / samples as f64).sqrt();
    Ok(xs
        .iter()
        .map(|&x| {
            let tail = |threshold: f64| frac(single.iter().filter(|v| v.abs() > threshold).count());
            let p_lower = tail(x + a);
            let p_upper = tail(0.5 * x);
            let middle = frac(first.iter().zip(&second).filter(|(u, v)| (*u - *v).abs() > x).count());
            let (lower, upper) = (0.5 * p_lower, 2.0 * p_upper);
            let (lower_se, middle_se, upper_se) = (0.5 * se(p_lower), se(middle), 2.0 * se(p_upper));
            let holds = lower - middle <= 3.0 * lower_se.hypot(middle_se)
                && middle - upper <= 3.0 * middle_se.hypot(upper_se);
            SymmetrizationRow { x, a, lower, middle, upper, lower_se, middle_se, upper_se, holds }
        })
        .collect())
}

/// `∫|x| dF = ∫_0^∞ (F(-x) + 1 - F(x)) dx`; infinite for tail exponent `≤ 1`.
pub fn first_abs_moment(measure: &SpectralMeasure) -> Result<Extended> {
    match measure {
        SpectralMeasure::Discrete(d) => Ok(Extended::Finite(d.atoms.iter().map(|&(l, w)| l.abs() * w).sum())),
        SpectralMeasure::Analytic(f) => f.first_abs_moment(&|x| measure.tail(x)),
    }
}

/// Named distributions used by the scenarios and the property checks.
pub fn family_registry() -> Vec<(&'static str, SpectralMeasure)> {
    let gaussian = Family::Gaussian { mean: 0.0, std_dev: 1.0 };
    let cauchy = Family::Cauchy { location: 0.0, scale: 1.0 };
    vec![
        ("point_mass", SpectralMeasure::Analytic(Family::PointMass { at: 0.5 })),
        ("gaussian", SpectralMeasure::Analytic(gaussian.clone())),
        ("shifted_gaussian", SpectralMeasure::Analytic(Family::Gaussian { mean: 1.5, std_dev: 0.3 })),
        ("cauchy", SpectralMeasure::Analytic(cauchy.clone())),
        ("pareto_half", SpectralMeasure::Analytic(Family::TwoSidedPareto { alpha: 0.5, scale: 1.0 })),
        ("pareto_one", SpectralMeasure::Analytic(Family::TwoSidedPareto { alpha: 1.0, scale: 1.0 })),
        ("pareto_light", SpectralMeasure::Analytic(Family::TwoSidedPareto { alpha: 1.8, scale: 1.0 })),
        ("gauss_cauchy_mixture", SpectralMeasure::Analytic(Family::Mixture(vec![(0.7, gaussian), (0.3, cauchy)]))),
    ]
}

/// Limit of `δ_F` for the standard Cauchy law.
pub const CAUCHY_DELTA_LIMIT: f64 = 2.0 / PI;

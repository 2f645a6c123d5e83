//! Survival amplitudes, short-time laws and decay-rate analytics.
//!
//! For a unit state `ψ` and `U(t) = e^{itH}` the survival amplitude is
//! `A(t) = <ψ, U(t) ψ>` and the survival probability `P(t) = |A(t)|²`.
//! Everything here is evaluated from the spectral weights of `ψ`, so
//! sampling a profile costs `O(d²)` per time point after one
//! eigendecomposition.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{ensure_dim, CVector, HermitianOperator, C64};

/// Either a finite nonnegative value or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }
}

pub(crate) fn ensure_normalized(psi: &CVector) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 || !norm.is_finite() {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// Eigenvalues of `H` paired with the weights `|<e_k, ψ>|²`.
#[derive(Debug, Clone)]
pub struct StateSpectrum {
    energies: Vec<f64>,
    weights: Vec<f64>,
}

impl StateSpectrum {
    pub fn new(h: &HermitianOperator, psi: &CVector) -> Result<Self> {
        ensure_dim(h.dim(), psi.len())?;
        ensure_normalized(psi)?;
        let coeffs = h.eigenvectors().adjoint() * psi;
        let mut weights: Vec<f64> = coeffs.iter().map(|c| c.norm_sqr()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { energies: h.eigenvalues().to_vec(), weights })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        self.energies.iter().zip(&self.weights).map(|(l, w)| l * w).sum()
    }

    /// `(ΔH)²`, computed about the mean.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| w * (l - mean).powi(2))
            .sum()
    }

    pub fn amplitude(&self, t: f64) -> C64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(&l, &w)| C64::new(0.0, t * l).exp() * w)
            .sum()
    }

    /// `1 - P(t) = Σ_jk w_j w_k 2 sin²(t(λ_j - λ_k)/2)`, free of cancellation.
    pub fn defect(&self, t: f64) -> f64 {
        let n = self.energies.len();
        let mut acc = 0.0;
        for j in 0..n {
            for k in (j + 1)..n {
                let s = (0.5 * t * (self.energies[j] - self.energies[k])).sin();
                acc += 4.0 * self.weights[j] * self.weights[k] * s * s;
            }
        }
        acc.clamp(0.0, 1.0)
    }

    pub fn probability(&self, t: f64) -> f64 {
        1.0 - self.defect(t)
    }
}

/// `A(t) = <ψ, e^{itH} ψ>`.
pub fn survival_amplitude(h: &HermitianOperator, psi: &CVector, t: f64) -> Result<C64> {
    Ok(StateSpectrum::new(h, psi)?.amplitude(t))
}

pub fn survival_probability(h: &HermitianOperator, psi: &CVector, t: f64) -> Result<f64> {
    Ok(StateSpectrum::new(h, psi)?.probability(t))
}

const VARIANCE_FLOOR: f64 = 1e-14;

/// Zeno time `τ_Z = (ΔH)^{-1}`; infinite for (numerical) eigenstates.
pub fn zeno_time(h: &HermitianOperator, psi: &CVector) -> Result<Extended> {
    let var = StateSpectrum::new(h, psi)?.variance();
    if var < VARIANCE_FLOOR {
        Ok(Extended::Infinite)
    } else {
        Ok(Extended::Finite(var.sqrt().recip()))
    }
}

/// `P_N(t) = P(t/N)^N`.
pub fn iterated_survival(h: &HermitianOperator, psi: &CVector, t: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("N must be positive"));
    }
    let spectrum = StateSpectrum::new(h, psi)?;
    Ok(iterated_from_defect(spectrum.defect(t / n as f64), n))
}

pub(crate) fn iterated_from_defect(defect: f64, n: u64) -> f64 {
    if defect >= 1.0 {
        return 0.0;
    }
    (n as f64 * (-defect).ln_1p()).exp()
}

/// Finite-difference step for [`geometric_speed`].
pub const SPEED_STEP: f64 = 1e-4;
const RICHARDSON_TOL: f64 = 1e-6;

/// Squared initial speed `k = <χ', χ'> - |<χ, χ'>|²` of the normalized path
/// `χ(t) = ψ(t)/|ψ(t)|` at `t = 0`.
///
/// `χ'(0)` is a Richardson-extrapolated central difference from steps `h`
/// and `h/2`; the two raw differences must agree to `1e-6`.
pub fn geometric_speed<F>(evolution: F, psi0: &CVector) -> Result<f64>
where
    F: Fn(f64, &CVector) -> CVector,
{
    ensure_normalized(psi0)?;
    let chi = |t: f64| -> Result<CVector> {
        let v = evolution(t, psi0);
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NonFinite);
        }
        Ok(v.unscale(n))
    };
    let h = SPEED_STEP;
    let central = |step: f64| -> Result<CVector> { Ok((chi(step)? - chi(-step)?).unscale(2.0 * step)) };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    let discrepancy = (&coarse - &fine).norm();
    if !discrepancy.is_finite() || discrepancy > RICHARDSON_TOL * (1.0 + fine.norm()) {
        return Err(Error::NotSmooth { discrepancy });
    }
    let velocity = (fine * C64::new(4.0, 0.0) - coarse).unscale(3.0);
    let position = chi(0.0)?;
    let overlap = position.dotc(&velocity);
    Ok(velocity.norm_squared() - overlap.norm_sqr())
}

/// Sampled survival probability.
#[derive(Debug, Clone)]
pub struct DecayProfile {
    times: Vec<f64>,
    probabilities: Vec<f64>,
    state: Option<CVector>,
    generator: Option<HermitianOperator>,
}

impl DecayProfile {
    /// Samples `P(t)` of `ψ` under `H` at `times`.
    pub fn sample(h: &HermitianOperator, psi: &CVector, times: &[f64]) -> Result<Self> {
        check_times(times)?;
        let spectrum = StateSpectrum::new(h, psi)?;
        let probabilities = times.par_iter().map(|&t| spectrum.probability(t)).collect();
        Ok(Self {
            times: times.to_vec(),
            probabilities,
            state: Some(psi.clone()),
            generator: Some(h.clone()),
        })
    }

    /// Wraps externally computed samples.
    pub fn from_samples(times: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        check_times(&times)?;
        if probabilities.len() != times.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: probabilities.len() });
        }
        if probabilities.iter().any(|p| !(*p >= 0.0 && *p <= 1.0 + 1e-12)) {
            return Err(Error::invalid("probabilities must lie in [0, 1]"));
        }
        Ok(Self { times, probabilities, state: None, generator: None })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn state(&self) -> Option<&CVector> {
        self.state.as_ref()
    }

    pub fn generator(&self) -> Option<&HermitianOperator> {
        self.generator.as_ref()
    }

    /// `2π` over the mean level spacing of the generator, if known.
    pub fn heisenberg_time(&self) -> Option<f64> {
        self.generator.as_ref().map(heisenberg_time)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("profile needs at least one time"));
    }
    if times.iter().any(|&t| !(t > 0.0 && t.is_finite())) || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("times must be positive and strictly increasing"));
    }
    Ok(())
}

/// `2π (d - 1) / (λ_max - λ_min)`; infinite for a degenerate spectrum.
pub fn heisenberg_time(h: &HermitianOperator) -> f64 {
    let spread = h.spread();
    if h.dim() < 2 || spread <= 0.0 {
        f64::INFINITY
    } else {
        2.0 * PI * (h.dim() - 1) as f64 / spread
    }
}

const PROBABILITY_FLOOR: f64 = 1e-300;

fn rate_from_probability(tau: f64, p: f64) -> Result<f64> {
    if !(p > PROBABILITY_FLOOR) {
        return Err(Error::NonpositiveProbability { time: tau, probability: p });
    }
    Ok(-p.ln() / tau)
}

/// `γ_eff(τ) = -ln P(τ) / τ` at every sample.
pub fn effective_rate_curve(profile: &DecayProfile) -> Result<Vec<(f64, f64)>> {
    profile
        .times
        .iter()
        .zip(&profile.probabilities)
        .map(|(&t, &p)| rate_from_probability(t, p).map(|g| (t, g)))
        .collect()
}

/// `γ_eff(τ)` evaluated directly from `(H, ψ)` without cancellation at small `τ`.
pub fn effective_rate(spectrum: &StateSpectrum, tau: f64) -> Result<f64> {
    let defect = spectrum.defect(tau);
    if defect >= 1.0 - PROBABILITY_FLOOR {
        return Err(Error::NonpositiveProbability { time: tau, probability: 1.0 - defect });
    }
    Ok(-(-defect).ln_1p() / tau)
}

/// Exponential-regime fit `P(t) ≈ Z e^{-γ₀ t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub gamma0: f64,
    pub z: f64,
    pub window: (f64, f64),
    /// RMS deviation of `ln P` from the fitted line.
    pub residual: f64,
}

pub const MIN_FIT_SAMPLES: usize = 10;
/// Fits whose log residual exceeds this are rejected as non-exponential.
pub const MAX_FIT_RESIDUAL: f64 = 0.1;

pub fn decay_fit(profile: &DecayProfile, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::invalid("window must satisfy lo < hi"));
    }
    let first = profile.times[0];
    let last = *profile.times.last().expect("profile is nonempty");
    if lo < first || hi > last {
        return Err(Error::invalid(format!(
            "window ({lo}, {hi}) outside the sampled range ({first}, {last})"
        )));
    }
    if let Some(th) = profile.heisenberg_time() {
        if hi > 0.5 * th {
            return Err(Error::BeyondHeisenbergTime { window_end: hi, limit: 0.5 * th });
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &p) in profile.times.iter().zip(&profile.probabilities) {
        if t >= lo && t <= hi {
            if !(p > PROBABILITY_FLOOR) {
                return Err(Error::NonpositiveProbability { time: t, probability: p });
            }
            xs.push(t);
            ys.push(p.ln());
        }
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(Error::WindowTooSmall { found: xs.len(), required: MIN_FIT_SAMPLES });
    }
    let fit = crate::fit::line_fit(&xs, &ys).ok_or_else(|| Error::invalid("degenerate fit window"))?;
    if fit.rms > MAX_FIT_RESIDUAL || fit.slope >= 0.0 {
        return Err(Error::NonExponential { residual: fit.rms });
    }
    Ok(DecayFit { gamma0: -fit.slope, z: fit.intercept.exp(), window, residual: fit.rms })
}

/// Relative slope `|dγ_eff/dτ| / γ_eff` below which the rate counts as flat.
pub const FLAT_RATE_SLOPE: f64 = 0.05;

/// Default window: from the first sample where `γ_eff` has flattened to the
/// last sample before half the Heisenberg time.
pub fn default_fit_window(profile: &DecayProfile) -> Result<(f64, f64)> {
    let curve = effective_rate_curve(profile)?;
    let limit = profile.heisenberg_time().map_or(f64::INFINITY, |th| 0.5 * th);
    let last = curve
        .iter()
        .rev()
        .map(|&(t, _)| t)
        .find(|&t| t <= limit)
        .ok_or_else(|| Error::invalid("no samples before half the Heisenberg time"))?;
    let start = curve
        .windows(2)
        .find(|w| {
            let (t0, g0) = w[0];
            let (t1, g1) = w[1];
            g0 > 0.0 && ((g1 - g0) / (t1 - t0)).abs() / g0 < FLAT_RATE_SLOPE
        })
        .map(|w| w[0].0)
        .ok_or_else(|| Error::invalid("effective rate never flattens"))?;
    if start >= last {
        return Err(Error::invalid("effective rate flattens only past half the Heisenberg time"));
    }
    Ok((start, last))
}

/// Solution of `γ_eff(τ*) = γ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingResult {
    pub tau_star: f64,
    pub bracket: (f64, f64),
    pub gamma_eff_at_star: f64,
}

/// Crossing on a sampled curve, bisecting its piecewise-linear interpolant.
pub fn find_crossing(curve: &[(f64, f64)], gamma0: f64) -> Result<CrossingResult> {
    let interp = |tau: f64| -> Result<f64> {
        let i = curve.partition_point(|&(t, _)| t < tau).clamp(1, curve.len() - 1);
        let (t0, g0) = curve[i - 1];
        let (t1, g1) = curve[i];
        Ok(g0 + (g1 - g0) * (tau - t0) / (t1 - t0))
    };
    find_crossing_with(curve, gamma0, interp)
}

/// Crossing located on the sampled `curve` and refined by bisection on `rate`.
pub fn find_crossing_with<F>(curve: &[(f64, f64)], gamma0: f64, rate: F) -> Result<CrossingResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if curve.len() < 2 {
        return Err(Error::invalid("crossing search needs at least two points"));
    }
    if !(gamma0 > 0.0) {
        return Err(Error::invalid("natural rate must be positive"));
    }
    let diff = |g: f64| g - gamma0;
    let pair = curve
        .windows(2)
        .find(|w| diff(w[0].1) < 0.0 && diff(w[1].1) >= 0.0 || diff(w[0].1) > 0.0 && diff(w[1].1) <= 0.0);
    let Some(pair) = pair else {
        let min = curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let max = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::NoCrossing { min, max });
    };
    let bracket = (pair[0].0, pair[1].0);
    let (mut lo, mut hi) = bracket;
    let lo_sign = diff(pair[0].1) < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= 1e-12 * mid {
            break;
        }
        if (diff(rate(mid)?) < 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut tau_star = 0.5 * (lo + hi);
    // keep the solution strictly inside the sampled bracket
    let width = bracket.1 - bracket.0;
    tau_star = tau_star.clamp(bracket.0 + 1e-15 * width, bracket.1 - 1e-15 * width);
    let gamma_eff_at_star = rate(tau_star)?;
    Ok(CrossingResult { tau_star, bracket, gamma_eff_at_star })
}

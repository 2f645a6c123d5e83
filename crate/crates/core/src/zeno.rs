//! Iterated measurement products and their Zeno limit.
//!
//! For a Hamiltonian `H` with `U(t) = e^{itH}` and a projection `E`, the
//! product `F_n(t) = [E U(t/n) E]^n` converges to the Zeno dynamics
//! `e^{it EHE} E` with a first-order rate in `1/n`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{line_fit, logspace};
use crate::operator::{
    ensure_dim, evolve_real, identity, matrix_power, norm_unchecked, psd_sqrt, CMatrix, CVector,
    HermitianOperator, OrthogonalProjection, C64,
};

/// Shape of the single step that is iterated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProductOrdering {
    /// `[E U E]^n`
    Eue,
    /// `[U E]^n`
    Ue,
    /// `[E U]^n`
    Eu,
}

impl ProductOrdering {
    pub const ALL: [ProductOrdering; 3] = [ProductOrdering::Eue, ProductOrdering::Ue, ProductOrdering::Eu];

    /// Builds the single step from the short-time propagator `step` and `E`.
    pub fn step(self, propagator: &CMatrix, e: &CMatrix) -> CMatrix {
        match self {
            ProductOrdering::Eue => e * propagator * e,
            ProductOrdering::Ue => propagator * e,
            ProductOrdering::Eu => e * propagator,
        }
    }
}

/// Measurement counts, evolution time and ordering for a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ZenoSchedule {
    n_values: Vec<u64>,
    t: f64,
    ordering: ProductOrdering,
}

impl ZenoSchedule {
    pub fn new(n_values: Vec<u64>, t: f64, ordering: ProductOrdering) -> Result<Self> {
        if n_values.is_empty() {
            return Err(Error::invalid("schedule needs at least one n"));
        }
        if n_values[0] == 0 || n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("schedule n values must be positive and strictly increasing"));
        }
        if !t.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self { n_values, t, ordering })
    }

    /// `n = 2, 4, ..., 4096` with the symmetric ordering.
    pub fn default_at(t: f64) -> Self {
        Self::powers_of_two(1, 12, t, ProductOrdering::Eue)
    }

    /// `n = 2^lo, ..., 2^hi`.
    pub fn powers_of_two(lo: u32, hi: u32, t: f64, ordering: ProductOrdering) -> Self {
        Self { n_values: (lo..=hi).map(|k| 1u64 << k).collect(), t, ordering }
    }

    pub fn n_values(&self) -> &[u64] {
        &self.n_values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn ordering(&self) -> ProductOrdering {
        self.ordering
    }

    pub fn with_ordering(mut self, ordering: ProductOrdering) -> Self {
        self.ordering = ordering;
        self
    }
}

/// `F_n(t)` in the requested ordering.
pub fn zeno_product(
    h: &HermitianOperator,
    e: &OrthogonalProjection,
    t: f64,
    n: u64,
    ordering: ProductOrdering,
) -> Result<CMatrix> {
    ensure_dim(h.dim(), e.dim())?;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    let u = evolve_real(h, t / n as f64);
    Ok(matrix_power(&ordering.step(&u, e.matrix()), n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSample {
    pub n: u64,
    pub distance_to_limit: f64,
    /// `|F_n - F_{2n}|`
    pub cauchy_delta: f64,
}

/// Power-law fit `distance ≈ constant * n^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFit {
    /// Every distance is at rounding level (see [`exact_distance_floor`]); no fit is attempted.
    Exact,
    Fitted { exponent: f64, constant: f64 },
    /// Fewer than two usable points in the fit range.
    Unavailable,
}

/// Distances at or below `1e-12 + 16 n ε` count as exact: an `n`-fold power
/// of a rounded step drifts by about `n ε` even when the product is exact.
pub fn exact_distance_floor(n: u64) -> f64 {
    1e-12 + 16.0 * n as f64 * f64::EPSILON
}

#[derive(Debug, Clone)]
pub struct ZenoConvergenceReport {
    pub per_n: Vec<ConvergenceSample>,
    /// Richardson estimate `2 F_{2N} - F_N` at the largest scheduled `N`.
    pub limit_matrix: CMatrix,
    pub target_matrix: CMatrix,
    /// `|limit_matrix - target_matrix|`
    pub target_residual: f64,
    pub rate: RateFit,
}

impl ZenoConvergenceReport {
    pub fn fitted_rate_exponent(&self) -> Option<f64> {
        match self.rate {
            RateFit::Fitted { exponent, .. } => Some(exponent),
            _ => None,
        }
    }

    pub fn fitted_rate_constant(&self) -> Option<f64> {
        match self.rate {
            RateFit::Fitted { constant, .. } => Some(constant),
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.rate == RateFit::Exact
    }

    pub fn distance_at(&self, n: u64) -> Option<f64> {
        self.per_n.iter().find(|s| s.n == n).map(|s| s.distance_to_limit)
    }
}

/// Shared engine: products for every scheduled `n` and `2n`, compared with
/// `target`. Products are evaluated independently and merged in `n` order.
pub(crate) fn convergence_report<F>(n_values: &[u64], target: CMatrix, product: F) -> Result<ZenoConvergenceReport>
where
    F: Fn(u64) -> Result<CMatrix> + Sync,
{
    let mut needed: Vec<u64> = n_values.iter().flat_map(|&n| [n, 2 * n]).collect();
    needed.sort_unstable();
    needed.dedup();
    let products: BTreeMap<u64, CMatrix> = needed
        .par_iter()
        .map(|&n| product(n).map(|m| (n, m)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();

    let per_n: Vec<ConvergenceSample> = n_values
        .iter()
        .map(|&n| {
            let f = &products[&n];
            ConvergenceSample {
                n,
                distance_to_limit: norm_unchecked(&(f - &target)),
                cauchy_delta: norm_unchecked(&(f - &products[&(2 * n)])),
            }
        })
        .collect();

    let n_max = *n_values.last().expect("schedule is nonempty");
    let limit_matrix = &products[&(2 * n_max)] * C64::new(2.0, 0.0) - &products[&n_max];
    let target_residual = norm_unchecked(&(&limit_matrix - &target));
    let rate = fit_rate(&per_n);
    Ok(ZenoConvergenceReport { per_n, limit_matrix, target_matrix: target, target_residual, rate })
}

/// Log-log fit over the largest half of the schedule.
fn fit_rate(per_n: &[ConvergenceSample]) -> RateFit {
    if per_n.iter().all(|s| s.distance_to_limit <= exact_distance_floor(s.n)) {
        return RateFit::Exact;
    }
    let tail = &per_n[per_n.len() / 2..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail
        .iter()
        .filter(|s| s.distance_to_limit > 0.0)
        .map(|s| ((s.n as f64).ln(), s.distance_to_limit.ln()))
        .unzip();
    match line_fit(&xs, &ys) {
        Some(fit) => RateFit::Fitted { exponent: fit.slope, constant: fit.intercept.exp() },
        None => RateFit::Unavailable,
    }
}

/// `e^{it EHE} E` on the full space.
pub fn reduced_dynamics(h: &HermitianOperator, e: &OrthogonalProjection, t: f64) -> Result<CMatrix> {
    ensure_dim(h.dim(), e.dim())?;
    let compressed = HermitianOperator::new(e.compress(h.matrix()))?;
    Ok(evolve_real(&compressed, t) * e.matrix())
}

/// Convergence of `F_n(t)` to the reduced dynamics along `schedule`.
pub fn zeno_convergence_report(
    h: &HermitianOperator,
    e: &OrthogonalProjection,
    schedule: &ZenoSchedule,
) -> Result<ZenoConvergenceReport> {
    let t = schedule.t();
    let target = reduced_dynamics(h, e, t)?;
    let ordering = schedule.ordering();
    convergence_report(schedule.n_values(), target, |n| zeno_product(h, e, t, n, ordering))
}

/// The Zeno generator expressed in an orthonormal basis of `range(E)`.
#[derive(Debug, Clone)]
pub struct ZenoGenerator {
    /// `B^dagger H B` for the basis `B` of `range(E)`.
    pub restricted: HermitianOperator,
    /// `dim x rank` orthonormal basis of `range(E)`.
    pub basis: CMatrix,
    /// Distance between the compression and the form route.
    pub route_residual: f64,
}

impl ZenoGenerator {
    /// `EHE` on the full space.
    pub fn embedded(&self) -> CMatrix {
        &self.basis * self.restricted.matrix() * self.basis.adjoint()
    }
}

const GENERATOR_ROUTE_TOL: f64 = 1e-10;

/// Compression `EHE` of `H` to `range(E)`, cross-checked against the
/// quadratic-form route `(H^{1/2}E)^dagger (H^{1/2}E)`. For an `H` that is
/// not PSD the form route is applied to `H + cI` and shifted back by `cE`.
pub fn zeno_generator(h: &HermitianOperator, e: &OrthogonalProjection) -> Result<ZenoGenerator> {
    ensure_dim(h.dim(), e.dim())?;
    if e.rank() == 0 {
        return Err(Error::ZeroRank);
    }
    let basis = e.basis().clone();
    let compressed = basis.adjoint() * h.matrix() * &basis;

    let shift = (-h.min_eigenvalue()).max(0.0);
    let shifted = if shift > 0.0 {
        HermitianOperator::from_spectrum(
            h.eigenvalues().iter().map(|l| l + shift).collect(),
            h.eigenvectors().clone(),
        )
    } else {
        h.clone()
    };
    let root = psd_sqrt(&shifted)?;
    let half = root.matrix() * e.matrix();
    let form = half.adjoint() * &half - e.matrix() * C64::new(shift, 0.0);
    let form_restricted = basis.adjoint() * form * &basis;
    let route_residual = norm_unchecked(&(&form_restricted - &compressed));
    if route_residual > GENERATOR_ROUTE_TOL * (1.0 + h.norm()) {
        return Err(Error::RouteMismatch { residual: route_residual });
    }
    Ok(ZenoGenerator { restricted: HermitianOperator::new(compressed)?, basis, route_residual })
}

/// Lipschitz fit of `|E^perp U(tau) E|` against `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AzcFit {
    /// `E` is invariant: `E^perp U(tau) E` vanishes identically.
    ExactlyZeno,
    /// `|E^perp U(tau) E| ≈ constant * tau^exponent`; the constant is the
    /// square root of the Cauchy-estimate constant.
    Fitted { constant: f64, exponent: f64 },
}

impl AzcFit {
    /// Constant `C` of the Cauchy estimate `|F_n - F_m| <= C t^2 / n`.
    pub fn cauchy_constant(&self) -> f64 {
        match self {
            AzcFit::ExactlyZeno => 0.0,
            AzcFit::Fitted { constant, .. } => constant * constant,
        }
    }
}

/// Ten points from `1e-2` down to `1e-4`.
pub fn default_tau_grid() -> Vec<f64> {
    logspace(1e-2, 1e-4, 10)
}

pub fn azc_fit(h: &HermitianOperator, e: &OrthogonalProjection, tau_grid: &[f64]) -> Result<AzcFit> {
    ensure_dim(h.dim(), e.dim())?;
    if tau_grid.len() < 4 {
        return Err(Error::invalid("azc fit needs at least 4 tau values"));
    }
    if tau_grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) || tau_grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::invalid("tau grid must be decreasing within (0, 1]"));
    }
    let perp = e.complement();
    let norms: Vec<f64> = tau_grid
        .iter()
        .map(|&tau| norm_unchecked(&(perp.matrix() * evolve_real(h, tau) * e.matrix())))
        .collect();
    if norms.iter().all(|&v| v < 1e-14) {
        return Ok(AzcFit::ExactlyZeno);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = tau_grid
        .iter()
        .zip(&norms)
        .filter(|(_, &v)| v > 0.0)
        .map(|(t, v)| (t.ln(), v.ln()))
        .unzip();
    let fit = line_fit(&xs, &ys).ok_or_else(|| Error::invalid("degenerate azc fit"))?;
    Ok(AzcFit::Fitted { constant: fit.intercept.exp(), exponent: fit.slope })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousMeasurementReport {
    /// `(K, max deviation over probes)`
    pub samples: Vec<(f64, f64)>,
    /// Whether the second half of the samples is nonincreasing up to 10% ripple.
    pub tail_nonincreasing: bool,
}

/// Compares `e^{it(H + K E^perp)} psi` with `e^{it EHE} psi` for probes in `range(E)`.
pub fn continuous_measurement_compare(
    h: &HermitianOperator,
    e: &OrthogonalProjection,
    k_values: &[f64],
    t: f64,
    probes: &[CVector],
) -> Result<ContinuousMeasurementReport> {
    ensure_dim(h.dim(), e.dim())?;
    if k_values.is_empty() || k_values.iter().any(|&k| !(k > 0.0)) || k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("K values must be positive and increasing"));
    }
    for p in probes {
        ensure_dim(h.dim(), p.len())?;
        let leakage = e.leakage(p);
        if leakage > 1e-10 * (1.0 + p.norm()) {
            return Err(Error::ProbeOutsideRange { leakage });
        }
    }
    let reduced = reduced_dynamics(h, e, t)?;
    let limits: Vec<CVector> = probes.iter().map(|p| &reduced * p).collect();
    let perp = identity(h.dim()) - e.matrix();

    let samples = k_values
        .par_iter()
        .map(|&k| {
            let hk = HermitianOperator::new(h.matrix() + &perp * C64::new(k, 0.0))?;
            let u = evolve_real(&hk, t);
            let dev = probes
                .iter()
                .zip(&limits)
                .map(|(p, l)| (&u * p - l).norm())
                .fold(0.0, f64::max);
            Ok((k, dev))
        })
        .collect::<Result<Vec<_>>>()?;

    let tail = &samples[samples.len() / 2..];
    let tail_nonincreasing = tail.windows(2).all(|w| w[1].1 <= 1.1 * w[0].1 + 1e-12);
    Ok(ContinuousMeasurementReport { samples, tail_nonincreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{random_hermitian, random_projection, random_state, seeded_rng};
    use crate::operator::{basis_vector, diag, pauli_x, projection_from_span};

    fn rabi() -> (HermitianOperator, OrthogonalProjection) {
        let h = HermitianOperator::new(pauli_x()).unwrap();
        let e = projection_from_span(&[basis_vector(2, 0)]).unwrap();
        (h, e)
    }

    #[test]
    fn schedule_validation() {
        assert!(ZenoSchedule::new(vec![], 1.0, ProductOrdering::Eue).is_err());
        assert!(ZenoSchedule::new(vec![2, 2], 1.0, ProductOrdering::Eue).is_err());
        assert!(ZenoSchedule::new(vec![0, 2], 1.0, ProductOrdering::Eue).is_err());
        let s = ZenoSchedule::default_at(1.0);
        assert_eq!(s.n_values().len(), 12);
        assert_eq!(s.n_values()[11], 4096);
    }

    #[test]
    fn identity_projection_reproduces_evolution() {
        let h = random_hermitian(4, 1.0, &mut seeded_rng(3, 0)).unwrap();
        let e = OrthogonalProjection::identity(4);
        let u = evolve_real(&h, 0.8);
        for n in [1, 3, 64] {
            for o in ProductOrdering::ALL {
                let f = zeno_product(&h, &e, 0.8, n, o).unwrap();
                assert!(norm_unchecked(&(f - &u)) < 1e-12);
            }
        }
    }

    #[test]
    fn commuting_case_is_n_independent() {
        let h = HermitianOperator::from_real_diagonal(&[0.3, -0.5, 0.9]).unwrap();
        let e = OrthogonalProjection::new(diag(&[1.0, 1.0, 0.0])).unwrap();
        let expected = e.matrix() * evolve_real(&h, 1.3) * e.matrix();
        for n in [1, 7, 100] {
            let f = zeno_product(&h, &e, 1.3, n, ProductOrdering::Eue).unwrap();
            assert!(norm_unchecked(&(f - &expected)) < 1e-13);
        }
        let report = zeno_convergence_report(&h, &e, &ZenoSchedule::default_at(1.3)).unwrap();
        assert!(report.is_exact());
        assert!(report.per_n.iter().all(|s| s.distance_to_limit < 1e-12));
    }

    #[test]
    fn rabi_product_closed_form() {
        let (h, e) = rabi();
        for n in [1u64, 2, 5, 50, 1000] {
            let f = zeno_product(&h, &e, 1.0, n, ProductOrdering::Eue).unwrap();
            let expected = e.matrix() * C64::new((1.0 / n as f64).cos().powi(n as i32), 0.0);
            assert!(norm_unchecked(&(f - expected)) < 1e-12);
        }
    }

    #[test]
    fn rabi_report_first_order() {
        let (h, e) = rabi();
        let report = zeno_convergence_report(&h, &e, &ZenoSchedule::default_at(1.0)).unwrap();
        for s in &report.per_n {
            let exact = 1.0 - (1.0 / s.n as f64).cos().powi(s.n as i32);
            assert!((s.distance_to_limit - exact).abs() < 1e-12);
        }
        let exponent = report.fitted_rate_exponent().unwrap();
        assert!((exponent + 1.0).abs() < 0.01, "exponent {exponent}");
        assert!(norm_unchecked(&(reduced_dynamics(&h, &e, 1.0).unwrap() - e.matrix())) < 1e-15);
    }

    #[test]
    fn reduced_dynamics_at_zero_and_report_target() {
        let mut rng = seeded_rng(11, 0);
        let h = random_hermitian(5, 1.0, &mut rng).unwrap();
        let e = random_projection(5, 2, &mut rng).unwrap();
        assert!(norm_unchecked(&(reduced_dynamics(&h, &e, 0.0).unwrap() - e.matrix())) < 1e-14);
        let schedule = ZenoSchedule::powers_of_two(1, 4, 0.9, ProductOrdering::Eue);
        let report = zeno_convergence_report(&h, &e, &schedule).unwrap();
        assert_eq!(report.target_matrix, reduced_dynamics(&h, &e, 0.9).unwrap());
    }

    #[test]
    fn generator_cases() {
        let (h, e) = rabi();
        let g = zeno_generator(&h, &e).unwrap();
        assert_eq!(g.restricted.dim(), 1);
        assert!(g.restricted.matrix()[(0, 0)].norm() < 1e-15);

        let h = random_hermitian(4, 1.0, &mut seeded_rng(5, 0)).unwrap();
        let g = zeno_generator(&h, &OrthogonalProjection::identity(4)).unwrap();
        assert!(norm_unchecked(&(g.embedded() - h.matrix())) < 1e-13);
        assert!(matches!(
            zeno_generator(&h, &OrthogonalProjection::zero(4)),
            Err(Error::ZeroRank)
        ));
    }

    #[test]
    fn azc_cases() {
        let h = HermitianOperator::from_real_diagonal(&[0.3, -0.5, 0.9]).unwrap();
        let e = OrthogonalProjection::new(diag(&[1.0, 0.0, 1.0])).unwrap();
        assert_eq!(azc_fit(&h, &e, &default_tau_grid()).unwrap(), AzcFit::ExactlyZeno);

        let (h, e) = rabi();
        let grid = default_tau_grid();
        let perp = e.complement();
        for &tau in &grid {
            let v = norm_unchecked(&(perp.matrix() * evolve_real(&h, tau) * e.matrix()));
            assert!((v - tau.sin().abs()).abs() < 1e-12);
        }
        match azc_fit(&h, &e, &grid).unwrap() {
            AzcFit::Fitted { constant, exponent } => {
                assert!((exponent - 1.0).abs() < 1e-4);
                assert!((constant - 1.0).abs() < 1e-4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(azc_fit(&h, &e, &[0.1, 0.01, 0.001]).is_err());
        assert!(azc_fit(&h, &e, &[0.001, 0.01, 0.1, 0.5]).is_err());
    }

    #[test]
    fn continuous_measurement_trivial_cases() {
        let h = random_hermitian(3, 1.0, &mut seeded_rng(2, 0)).unwrap();
        let e = OrthogonalProjection::identity(3);
        let probe = random_state(3, &mut seeded_rng(2, 1));
        let r = continuous_measurement_compare(&h, &e, &[1.0, 10.0], 1.0, &[probe]).unwrap();
        assert!(r.samples.iter().all(|&(_, d)| d < 1e-12));

        let h = HermitianOperator::from_real_diagonal(&[0.3, -0.5, 0.9]).unwrap();
        let e = OrthogonalProjection::new(diag(&[1.0, 1.0, 0.0])).unwrap();
        let probe = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)]);
        let r = continuous_measurement_compare(&h, &e, &[1.0, 100.0, 1e4], 2.0, &[probe]).unwrap();
        assert!(r.samples.iter().all(|&(_, d)| d < 1e-12));

        let outside = basis_vector(3, 2);
        assert!(matches!(
            continuous_measurement_compare(&h, &e, &[1.0], 1.0, &[outside]),
            Err(Error::ProbeOutsideRange { .. })
        ));
    }

    #[test]
    fn rabi_continuous_measurement_decays_like_inverse_k() {
        let (h, e) = rabi();
        let r = continuous_measurement_compare(&h, &e, &[10.0, 100.0, 1000.0], 1.0, &[basis_vector(2, 0)]).unwrap();
        assert!(r.tail_nonincreasing);
        let scaled: Vec<f64> = r.samples.iter().map(|&(k, d)| k * d).collect();
        // K * deviation approaches a constant: ratios within a factor of 2
        assert!(scaled.windows(2).all(|w| w[1] / w[0] > 0.5 && w[1] / w[0] < 2.0), "{scaled:?}");
    }
}

//! Model builders and the perturbation non-return check.

use std::f64::consts::PI;

use zeno_core::ensemble::{random_hermitian, random_projection, random_vector, seeded_rng};
use zeno_core::fit::linspace;
use zeno_core::operator::{basis_vector, evolve_real, norm_unchecked, pauli_x, projection_from_span};
use zeno_core::spectral::family_registry;
use zeno_core::survival::heisenberg_time;
use zeno_core::zeno::{azc_fit, default_tau_grid, zeno_convergence_report, AzcFit};
use zeno_core::{CMatrix, CVector, HermitianOperator, OrthogonalProjection, SpectralMeasure, ZenoSchedule, C64};

use crate::config::{CouplingProfile, DistributionConfig, ModelConfig};
use crate::error::{CliError, CliResult};

const MODEL_STREAM: u64 = 40;
const SURVIVAL_SAMPLES: usize = 1000;

/// A built model: generator, measured projection and initial state in its range.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub h: HermitianOperator,
    pub e: OrthogonalProjection,
    pub psi: CVector,
    /// Golden-rule rate `2π g(ε)² ρ(ε)` for decay models.
    pub gamma_golden: Option<f64>,
    /// Survival grid suggested by the builder.
    pub survival_grid: Vec<f64>,
    /// Split `H = H_P + P` of the perturbed model.
    pub perturbation: Option<Perturbation>,
}

#[derive(Debug, Clone)]
pub struct Perturbation {
    /// Unperturbed generator, block diagonal with respect to `E`.
    pub h_p: HermitianOperator,
    pub p: CMatrix,
    pub norm: f64,
}

pub fn build_scenario(model: &ModelConfig) -> CliResult<Scenario> {
    match model {
        ModelConfig::Rabi {} => rabi(),
        ModelConfig::Random { dim, rank_e, seed } => random(*dim, *rank_e, *seed),
        ModelConfig::Friedrichs { n_modes, band, excited_energy, coupling_strength, profile } => {
            friedrichs(*n_modes, *band, *excited_energy, *coupling_strength, *profile)
        }
        ModelConfig::Perturbed { dim, seed, perturbation_norm } => perturbed(*dim, *seed, *perturbation_norm),
    }
}

fn rabi() -> CliResult<Scenario> {
    let psi = basis_vector(2, 0);
    Ok(Scenario {
        h: HermitianOperator::new(pauli_x())?,
        e: projection_from_span(std::slice::from_ref(&psi))?,
        psi,
        gamma_golden: None,
        survival_grid: linspace(0.01, 1.5, 150),
        perturbation: None,
    })
}

fn unit_in_range(e: &OrthogonalProjection, rng: &mut impl rand::Rng) -> CVector {
    let v = e.matrix() * random_vector(e.dim(), rng);
    let n = v.norm();
    v.unscale(n)
}

fn random(dim: usize, rank: usize, seed: u64) -> CliResult<Scenario> {
    let mut rng = seeded_rng(seed, MODEL_STREAM);
    let h = random_hermitian(dim, 1.0, &mut rng)?;
    let e = random_projection(dim, rank, &mut rng)?;
    let psi = unit_in_range(&e, &mut rng);
    let survival_grid = linspace(0.01, 10.0, 1000);
    Ok(Scenario { h, e, psi, gamma_golden: None, survival_grid, perturbation: None })
}

fn profile_value(profile: CouplingProfile, band: (f64, f64), omega: f64) -> f64 {
    match profile {
        CouplingProfile::Flat => 1.0,
        CouplingProfile::Gaussian => {
            let centre = 0.5 * (band.0 + band.1);
            let sigma = 0.25 * (band.1 - band.0);
            (-(omega - centre).powi(2) / (2.0 * sigma * sigma)).exp()
        }
    }
}

/// One level at `excited_energy` coupled to `n_modes` band levels on a uniform
/// midpoint grid, with `g_k = coupling · √(width / n_modes) · profile(ω_k)`.
fn friedrichs(
    n_modes: usize,
    band: (f64, f64),
    excited_energy: f64,
    coupling: f64,
    profile: CouplingProfile,
) -> CliResult<Scenario> {
    let dim = n_modes + 1;
    let width = band.1 - band.0;
    let spacing = width / n_modes as f64;
    let mut m = CMatrix::zeros(dim, dim);
    m[(0, 0)] = C64::new(excited_energy, 0.0);
    for k in 0..n_modes {
        let omega = band.0 + (k as f64 + 0.5) * spacing;
        let g = coupling * spacing.sqrt() * profile_value(profile, band, omega);
        m[(k + 1, k + 1)] = C64::new(omega, 0.0);
        m[(0, k + 1)] = C64::new(g, 0.0);
        m[(k + 1, 0)] = C64::new(g, 0.0);
    }
    let h = HermitianOperator::new(m)?;
    let psi = basis_vector(dim, 0);
    let e = projection_from_span(std::slice::from_ref(&psi))?;
    // ρ = 1 / spacing cancels the spacing in g_k²
    let gamma_golden = 2.0 * PI * (coupling * profile_value(profile, band, excited_energy)).powi(2);
    let end = 0.5 * heisenberg_time(&h) * (1.0 - 1e-9);
    let survival_grid = linspace(end / SURVIVAL_SAMPLES as f64, end, SURVIVAL_SAMPLES);
    Ok(Scenario { h, e, psi, gamma_golden: Some(gamma_golden), survival_grid, perturbation: None })
}

/// `H = H_P + P` with `H_P` block diagonal for a random rank `dim/2` projection
/// and `P` random Hermitian of norm `perturbation_norm`.
fn perturbed(dim: usize, seed: u64, norm: f64) -> CliResult<Scenario> {
    let mut rng = seeded_rng(seed, MODEL_STREAM + 1);
    let e = random_projection(dim, (dim / 2).max(1), &mut rng)?;
    let perp = e.complement();
    let a = random_hermitian(dim, 1.0, &mut rng)?;
    let b = random_hermitian(dim, 1.0, &mut rng)?;
    let block = e.compress(a.matrix()) + perp.compress(b.matrix());
    let h_p = HermitianOperator::new((&block + block.adjoint()).unscale(2.0))?;
    let p = if norm > 0.0 { random_hermitian(dim, norm, &mut rng)?.matrix().clone() } else { CMatrix::zeros(dim, dim) };
    let h = HermitianOperator::new(h_p.matrix() + &p)?;
    let psi = unit_in_range(&e, &mut rng);
    Ok(Scenario {
        h,
        e,
        psi,
        gamma_golden: None,
        survival_grid: linspace(0.01, 10.0, 1000),
        perturbation: Some(Perturbation { h_p, p, norm }),
    })
}

pub fn build_distribution(d: &DistributionConfig) -> CliResult<SpectralMeasure> {
    let wrap = |r: zeno_core::Result<SpectralMeasure>| {
        r.map_err(|e| CliError::Config { field: "distribution".into(), message: e.to_string() })
    };
    match d {
        DistributionConfig::PointMass { at } => wrap(SpectralMeasure::point_mass(*at)),
        DistributionConfig::Gaussian { mean, std_dev } => wrap(SpectralMeasure::gaussian(*mean, *std_dev)),
        DistributionConfig::Cauchy { location, scale } => wrap(SpectralMeasure::cauchy(*location, *scale)),
        DistributionConfig::Pareto { alpha, scale } => wrap(SpectralMeasure::pareto(*alpha, *scale)),
        DistributionConfig::Registry { name } => family_registry()
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| CliError::Config { field: "distribution.registry.name".into(), message: format!("unknown family `{name}`") }),
    }
}

pub const INVARIANCE_SLACK: f64 = 1e-10;
/// Relative allowance on the AZC constant over `‖P‖`.
pub const AZC_SLACK: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceRow {
    pub t: f64,
    /// `‖E⊥ U(t) E‖`
    pub leakage: f64,
    /// `e^{‖P‖ t} - 1`
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub rows: Vec<InvarianceRow>,
    pub perturbation_norm: f64,
    /// `‖E⊥ W(1)‖` for the Zeno limit `W`.
    pub limit_leakage: f64,
    pub limit_rate_exponent: Option<f64>,
    pub azc: AzcFit,
}

impl InvarianceReport {
    pub fn bound_holds(&self) -> bool {
        self.rows.iter().all(|r| r.leakage <= r.bound + INVARIANCE_SLACK)
    }

    pub fn azc_within_bound(&self) -> bool {
        match self.azc {
            AzcFit::ExactlyZeno => true,
            AzcFit::Fitted { constant, .. } => constant <= self.perturbation_norm * (1.0 + AZC_SLACK),
        }
    }

    pub fn holds(&self) -> bool {
        self.bound_holds() && self.azc_within_bound() && self.limit_leakage < INVARIANCE_SLACK
    }
}

/// Twenty times in `(0, 1]`.
pub fn invariance_times() -> Vec<f64> {
    linspace(0.05, 1.0, 20)
}

pub fn perturbed_invariance_check(model: &ModelConfig) -> CliResult<InvarianceReport> {
    if !matches!(model, ModelConfig::Perturbed { .. }) {
        return Err(CliError::Config { field: "model".into(), message: "invariance check needs the perturbed model".into() });
    }
    let s = build_scenario(model)?;
    let p = s.perturbation.as_ref().expect("perturbed model carries its split");
    let perp = s.e.complement();
    let rows = invariance_times()
        .into_iter()
        .map(|t| InvarianceRow {
            t,
            leakage: norm_unchecked(&(perp.matrix() * evolve_real(&s.h, t) * s.e.matrix())),
            bound: (p.norm * t).exp_m1(),
        })
        .collect();
    let report = zeno_convergence_report(&s.h, &s.e, &ZenoSchedule::default_at(1.0))?;
    let limit_leakage = norm_unchecked(&(perp.matrix() * &report.target_matrix));
    Ok(InvarianceReport {
        rows,
        perturbation_norm: p.norm,
        limit_leakage,
        limit_rate_exponent: report.fitted_rate_exponent(),
        azc: azc_fit(&s.h, &s.e, &default_tau_grid())?,
    })
}

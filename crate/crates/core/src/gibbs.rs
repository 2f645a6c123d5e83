//! Gibbs states, complex-time Heisenberg dynamics and KMS residuals.
//!
//! Dynamics is `τ_z(B) = e^{izH} B e^{-izH}`; a state `ω` is `(τ, β)`-KMS when
//! `ω(A τ_{t+iβ}(B)) = ω(τ_t(B) A)` for all `A`, `B` and real `t`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{
    ensure_dim, ensure_square, norm_unchecked, CMatrix, HermitianOperator, OrthogonalProjection, C64,
};

const STATE_TOL: f64 = 1e-10;
/// Base factor of the KMS tolerance `1e-10·‖A‖‖B‖·e^{β·spread}`.
pub const KMS_TOL: f64 = 1e-10;

/// A density matrix together with the Hamiltonian it equilibrates.
#[derive(Debug, Clone)]
pub struct DensityState {
    rho: CMatrix,
    beta: f64,
    hamiltonian: HermitianOperator,
}

impl DensityState {
    /// Validates positivity, unit trace and commutation with `hamiltonian`.
    pub fn new(rho: CMatrix, beta: f64, hamiltonian: HermitianOperator) -> Result<Self> {
        ensure_square(&rho)?;
        ensure_dim(hamiltonian.dim(), rho.nrows())?;
        let herm = HermitianOperator::new(rho.clone())?;
        if herm.min_eigenvalue() < -STATE_TOL {
            return Err(Error::NotPsd { min_eigenvalue: herm.min_eigenvalue() });
        }
        let trace = rho.trace();
        if (trace - 1.0).norm() > STATE_TOL {
            return Err(Error::NotNormalized { norm: trace.norm() });
        }
        let comm = norm_unchecked(&(&rho * hamiltonian.matrix() - hamiltonian.matrix() * &rho));
        if comm > STATE_TOL * (1.0 + hamiltonian.norm()) {
            return Err(Error::invalid(format!("state does not commute with its Hamiltonian ({comm:.3e})")));
        }
        Ok(Self { rho, beta, hamiltonian })
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// `ω(A) = Tr(ρ A)`.
    pub fn expectation(&self, a: &CMatrix) -> C64 {
        // Tr(ρA) without forming the product
        self.rho.transpose().component_mul(a).sum()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta must be finite and nonnegative"));
    }
    Ok(())
}

fn boltzmann(h: &HermitianOperator, beta: f64) -> Vec<f64> {
    let ground = h.min_eigenvalue();
    let w: Vec<f64> = h.eigenvalues().iter().map(|l| (-beta * (l - ground)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// `Σ_k w_k |e_k><e_k|` over the eigenvectors of `h`.
fn weighted_projector_sum(h: &HermitianOperator, weights: &[f64]) -> CMatrix {
    let v = h.eigenvectors();
    let mut scaled = v.clone();
    for (mut col, &w) in scaled.column_iter_mut().zip(weights) {
        col *= C64::new(w, 0.0);
    }
    scaled * v.adjoint()
}

/// `e^{-βH} / Tr e^{-βH}` from the spectrum, shifted by the ground energy.
pub fn gibbs_state(h: &HermitianOperator, beta: f64) -> Result<DensityState> {
    check_beta(beta)?;
    let rho = weighted_projector_sum(h, &boltzmann(h, beta));
    DensityState::new(rho, beta, h.clone())
}

/// `e^{izH} A e^{-izH}` via the eigenbasis.
pub fn heisenberg_evolve(h: &HermitianOperator, a: &CMatrix, z: C64) -> Result<CMatrix> {
    ensure_square(a)?;
    ensure_dim(h.dim(), a.nrows())?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let exponent = z.im.abs() * h.spread();
    if exponent > crate::operator::EXP_LIMIT {
        return Err(Error::Overflow { exponent });
    }
    let v = h.eigenvectors();
    let lam = h.eigenvalues();
    let mut inner = v.adjoint() * a * v;
    for j in 0..inner.nrows() {
        for k in 0..inner.ncols() {
            inner[(j, k)] *= (C64::new(0.0, 1.0) * z * (lam[j] - lam[k])).exp();
        }
    }
    Ok(v * inner * v.adjoint())
}

/// `|ω(A τ_{t+iβ}(B)) - ω(τ_t(B) A)|` for the dynamics of `generator`.
pub fn kms_residual_with(
    state: &DensityState,
    generator: &HermitianOperator,
    a: &CMatrix,
    b: &CMatrix,
    t: f64,
    beta: f64,
) -> Result<f64> {
    ensure_dim(state.dim(), a.nrows())?;
    ensure_dim(state.dim(), b.nrows())?;
    let shifted = heisenberg_evolve(generator, b, C64::new(t, beta))?;
    let real = heisenberg_evolve(generator, b, C64::new(t, 0.0))?;
    let lhs = state.expectation(&(a * shifted));
    let rhs = state.expectation(&(real * a));
    Ok((lhs - rhs).norm())
}

/// KMS residual under the state's own Hamiltonian.
pub fn kms_residual(state: &DensityState, a: &CMatrix, b: &CMatrix, t: f64, beta: f64) -> Result<f64> {
    kms_residual_with(state, state.hamiltonian(), a, b, t, beta)
}

/// `1e-10·‖A‖‖B‖·e^{β·spread(generator)}`.
pub fn kms_tolerance(generator: &HermitianOperator, a: &CMatrix, b: &CMatrix, beta: f64) -> f64 {
    KMS_TOL * norm_unchecked(a) * norm_unchecked(b) * (beta * generator.spread()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmsReport {
    pub pairs_tested: usize,
    pub max_residual: f64,
    /// Largest residual divided by its pair's tolerance.
    pub max_scaled_residual: f64,
    pub t_range: (f64, f64),
    pub beta: f64,
}

impl KmsReport {
    pub fn passed(&self) -> bool {
        self.max_scaled_residual <= 1.0
    }
}

/// Worst KMS residual over `pairs × t_grid`.
pub fn kms_report(
    state: &DensityState,
    generator: &HermitianOperator,
    pairs: &[(CMatrix, CMatrix)],
    t_grid: &[f64],
    beta: f64,
) -> Result<KmsReport> {
    if pairs.is_empty() || t_grid.is_empty() {
        return Err(Error::invalid("need at least one pair and one time"));
    }
    let per_pair: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(a, b)| {
            let tol = kms_tolerance(generator, a, b, beta);
            let mut worst = (0.0f64, 0.0f64);
            for &t in t_grid {
                let r = kms_residual_with(state, generator, a, b, t, beta)?;
                worst = (worst.0.max(r), worst.1.max(r / tol));
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let (lo, hi) = t_grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &t| (l.min(t), h.max(t)));
    Ok(KmsReport {
        pairs_tested: pairs.len(),
        max_residual: per_pair.iter().map(|p| p.0).fold(0.0, f64::max),
        max_scaled_residual: per_pair.iter().map(|p| p.1).fold(0.0, f64::max),
        t_range: (lo, hi),
        beta,
    })
}

/// `e^{-βEHE}E / Tr(e^{-βEHE}E)`, built in an orthonormal basis of `range(E)`.
/// The returned state carries `EHE` as its Hamiltonian.
pub fn zeno_gibbs_state(h: &HermitianOperator, e: &OrthogonalProjection, beta: f64) -> Result<DensityState> {
    ensure_dim(h.dim(), e.dim())?;
    check_beta(beta)?;
    if e.rank() == 0 {
        return Err(Error::ZeroRank);
    }
    let basis = e.basis();
    let restricted = HermitianOperator::new(basis.adjoint() * h.matrix() * basis)?;
    let inner = weighted_projector_sum(&restricted, &boltzmann(&restricted, beta));
    let rho = basis * inner * basis.adjoint();
    let compressed = HermitianOperator::new(e.compress(h.matrix()))?;
    DensityState::new(rho, beta, compressed)
}

/// Reduced-dynamics KMS check: the Zeno-Gibbs state of `E` against
/// `e^{itEHE}` on pairs from `E·M·E`.
pub fn reduced_kms_residual(
    h: &HermitianOperator,
    e: &OrthogonalProjection,
    beta: f64,
    pairs: &[(CMatrix, CMatrix)],
    t_grid: &[f64],
) -> Result<KmsReport> {
    let state = zeno_gibbs_state(h, e, beta)?;
    for (a, b) in pairs {
        for m in [a, b] {
            let off = norm_unchecked(&(m - e.compress(m)));
            if off > 1e-10 * (1.0 + norm_unchecked(m)) {
                return Err(Error::invalid("pairs must lie in the compressed algebra E·M·E"));
            }
        }
    }
    let generator = state.hamiltonian().clone();
    kms_report(&state, &generator, pairs, t_grid, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{ginibre, random_hermitian, random_projection, seeded_rng};
    use crate::operator::{basis_vector, identity, pauli_x};

    #[test]
    fn gibbs_closed_forms() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let s = gibbs_state(&h, 0.0).unwrap();
        assert!((s.rho() - identity(2).unscale(2.0)).norm() < 1e-15);
        let s = gibbs_state(&h, 1.0).unwrap();
        let z = 1.0 + (-1.0f64).exp();
        assert!((s.rho()[(0, 0)].re - 1.0 / z).abs() < 1e-15);
        assert!((s.rho()[(1, 1)].re - (-1.0f64).exp() / z).abs() < 1e-15);
        let s = gibbs_state(&h, 50.0).unwrap();
        assert!(s.rho()[(0, 0)].re > 1.0 - 1e-8);
        let cold = gibbs_state(&h, 1e6).unwrap();
        assert!(cold.rho()[(1, 1)].re == 0.0);
        assert!(gibbs_state(&h, -1.0).is_err());
    }

    #[test]
    fn heisenberg_cases() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let z = C64::new(0.7, 0.4);
        assert!((heisenberg_evolve(&h, &identity(2), z).unwrap() - identity(2)).norm() < 1e-15);
        let a = basis_vector(2, 0) * basis_vector(2, 1).adjoint();
        let out = heisenberg_evolve(&h, &a, z).unwrap();
        assert!((out - &a * (C64::new(0.0, -1.0) * z).exp()).norm() < 1e-14);
        assert!(matches!(
            heisenberg_evolve(&h, &a, C64::new(0.0, 1e3)),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn kms_holds_for_gibbs_and_fails_for_tracial() {
        let mut rng = seeded_rng(4, 0);
        let h = random_hermitian(4, 1.0, &mut rng).unwrap();
        let (a, b) = (ginibre(4, &mut rng), ginibre(4, &mut rng));
        let state = gibbs_state(&h, 1.0).unwrap();
        let tol = kms_tolerance(&h, &a, &b, 1.0);
        assert!(kms_residual(&state, &a, &b, 0.8, 1.0).unwrap() < tol);
        assert!(kms_residual(&state, &identity(4), &identity(4), 0.3, 1.0).unwrap() < 1e-14);
        let tracial = gibbs_state(&h, 0.0).unwrap();
        assert!(kms_residual(&tracial, &a, &b, 0.8, 1.0).unwrap() > 1e3 * tol);
    }

    #[test]
    fn rabi_zeno_gibbs_is_pure() {
        let h = HermitianOperator::new(pauli_x()).unwrap();
        let e = crate::operator::projection_from_span(&[basis_vector(2, 0)]).unwrap();
        let s = zeno_gibbs_state(&h, &e, 3.0).unwrap();
        assert!((s.rho() - e.matrix()).norm() < 1e-14);
        assert!(matches!(
            zeno_gibbs_state(&h, &OrthogonalProjection::zero(2), 1.0),
            Err(Error::ZeroRank)
        ));
    }

    #[test]
    fn reduced_kms_on_random_compression() {
        let mut rng = seeded_rng(6, 0);
        let h = random_hermitian(6, 1.0, &mut rng).unwrap();
        let e = random_projection(6, 3, &mut rng).unwrap();
        let pairs: Vec<_> = (0..10)
            .map(|_| (e.compress(&ginibre(6, &mut rng)), e.compress(&ginibre(6, &mut rng))))
            .collect();
        let report = reduced_kms_residual(&h, &e, 1.0, &pairs, &[-1.0, 0.0, 1.5]).unwrap();
        assert!(report.passed(), "{report:?}");
        let raw = vec![(ginibre(6, &mut rng), ginibre(6, &mut rng))];
        assert!(reduced_kms_residual(&h, &e, 1.0, &raw, &[0.0]).is_err());
    }
}

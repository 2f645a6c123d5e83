//! Degenerate product formulas for contraction semigroups.
//!
//! Covers `[e^{-tA/n} E]^n` for sectorial generators and the form-sum product
//! `[e^{-ta/n} e^{-tb/n}]^n` for closed forms supported on subspaces. In
//! finite dimension a closed semibounded form is a pair (support projection,
//! PSD operator supported there), which is how [`DegenerateForm`] stores it.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::operator::{
    ensure_dim, ensure_finite_matrix, ensure_square, expm, identity, matrix_power, norm_unchecked, CMatrix,
    HermitianOperator, OrthogonalProjection, C64,
};
use crate::zeno::{convergence_report, ZenoConvergenceReport};

const SECTOR_TOL: f64 = 1e-10;
const FORM_TOL: f64 = 1e-10;
/// Eigenvalues of `(I - P_a) + (I - P_b)` below this count as null directions.
pub const INTERSECTION_CUTOFF: f64 = 1e-10;

fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).unscale(2.0)
}

fn antihermitian_part(a: &CMatrix) -> CMatrix {
    (a - a.adjoint()) * C64::new(0.0, -0.5)
}

fn top_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Worst violation over unit vectors of
/// `|Im<φ,Aφ>| <= tan(π/2 - angle) Re<φ,Aφ>` together with `Re<φ,Aφ> >= 0`.
///
/// Evaluated exactly through the top eigenvalues of the Hermitian matrices
/// `±K - cR` and `-R`, where `A = R + iK`. A value `<= 0` means the numerical
/// range lies in the closed sector of half-opening `π/2 - angle`.
pub fn sector_margin(a: &CMatrix, angle: f64) -> Result<f64> {
    ensure_square(a)?;
    ensure_finite_matrix(a)?;
    if !(angle > 0.0 && angle <= FRAC_PI_2) {
        return Err(Error::invalid("sector angle must lie in (0, pi/2]"));
    }
    let slope = (FRAC_PI_2 - angle).tan();
    let r = hermitian_part(a);
    let k = antihermitian_part(a);
    let rc = &r * C64::new(slope, 0.0);
    let upper = top_eigenvalue(&(&k - &rc));
    let lower = top_eigenvalue(&(-&k - &rc));
    let accretive = top_eigenvalue(&(-&r));
    Ok(upper.max(lower).max(accretive))
}

/// Generator `A` of the semigroup `e^{-tA}`, validated as sectorial.
#[derive(Debug, Clone)]
pub struct SectorialOperator {
    matrix: CMatrix,
    angle: f64,
    margin: f64,
}

impl SectorialOperator {
    pub fn new(matrix: CMatrix, angle: f64) -> Result<Self> {
        let margin = sector_margin(&matrix, angle)?;
        if margin > SECTOR_TOL * (1.0 + matrix.norm()) {
            return Err(Error::NotSectorial { angle, margin });
        }
        Ok(Self { matrix, angle, margin })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `e^{-tA}`.
    pub fn semigroup(&self, t: f64) -> Result<CMatrix> {
        expm(&(&self.matrix * C64::new(-t, 0.0)))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("time must be positive and finite"))
    }
}

fn check_schedule(n_values: &[u64]) -> Result<()> {
    if n_values.is_empty() || n_values[0] == 0 || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("schedule n values must be positive and strictly increasing"));
    }
    Ok(())
}

/// `[e^{-tA/n} E]^n`.
pub fn degenerate_step_product(a: &SectorialOperator, e: &OrthogonalProjection, t: f64, n: u64) -> Result<CMatrix> {
    let step = a.semigroup(t / n as f64)? * e.matrix();
    Ok(matrix_power(&step, n))
}

/// Convergence of `[e^{-tA/n} E]^n` to `e^{-t EAE} E`.
pub fn degenerate_product(
    a: &SectorialOperator,
    e: &OrthogonalProjection,
    t: f64,
    n_values: &[u64],
) -> Result<ZenoConvergenceReport> {
    ensure_dim(a.dim(), e.dim())?;
    check_time(t)?;
    check_schedule(n_values)?;
    let compressed = e.compress(a.matrix());
    let target = expm(&(compressed * C64::new(-t, 0.0)))? * e.matrix();
    convergence_report(n_values, target, |n| degenerate_step_product(a, e, t, n))
}

/// Closed PSD form: support projection plus an operator supported on it.
#[derive(Debug, Clone)]
pub struct DegenerateForm {
    support: OrthogonalProjection,
    psd_part: HermitianOperator,
}

impl DegenerateForm {
    pub fn new(support: OrthogonalProjection, psd_part: HermitianOperator) -> Result<Self> {
        ensure_dim(support.dim(), psd_part.dim())?;
        let scale = 1.0 + psd_part.norm();
        let leak = norm_unchecked(&(support.compress(psd_part.matrix()) - psd_part.matrix()));
        if leak > FORM_TOL * scale {
            return Err(Error::invalid(format!("form operator leaves its support (residual {leak:e})")));
        }
        if psd_part.min_eigenvalue() < -FORM_TOL * scale {
            return Err(Error::NotPsd { min_eigenvalue: psd_part.min_eigenvalue() });
        }
        Ok(Self { support, psd_part })
    }

    /// Compresses `a` to `support` and validates the result.
    pub fn from_operator(support: OrthogonalProjection, a: &CMatrix) -> Result<Self> {
        let compressed = HermitianOperator::new(support.compress(a))?;
        Self::new(support, compressed)
    }

    /// The form that vanishes on `support`; its semigroup is the projection itself.
    pub fn zero_on(support: OrthogonalProjection) -> Self {
        let dim = support.dim();
        let zero = HermitianOperator::new(CMatrix::zeros(dim, dim)).expect("zero matrix decomposes");
        Self { support, psd_part: zero }
    }

    /// Densely defined form with operator `a`.
    pub fn full(a: HermitianOperator) -> Result<Self> {
        Self::new(OrthogonalProjection::identity(a.dim()), a)
    }

    pub fn support(&self) -> &OrthogonalProjection {
        &self.support
    }

    pub fn psd_part(&self) -> &HermitianOperator {
        &self.psd_part
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    /// `e^{-t a} := e^{-tA} P(K)`.
    pub fn semigroup(&self, t: f64) -> CMatrix {
        self.psd_part.apply_fn(|l| C64::new((-t * l).exp(), 0.0)) * self.support.matrix()
    }
}

/// Form sum `a + b` on the intersection of the supports.
pub fn form_sum_operator(a: &DegenerateForm, b: &DegenerateForm) -> Result<DegenerateForm> {
    ensure_dim(a.dim(), b.dim())?;
    let dim = a.dim();
    let id = identity(dim);
    let gap = (&id - a.support.matrix()) + (&id - b.support.matrix());
    let spectrum = HermitianOperator::new(gap)?;
    let null: Vec<usize> = (0..dim)
        .filter(|&k| spectrum.eigenvalues()[k] < INTERSECTION_CUTOFF)
        .collect();
    if null.is_empty() {
        return Ok(DegenerateForm::zero_on(OrthogonalProjection::zero(dim)));
    }
    let basis = CMatrix::from_fn(dim, null.len(), |i, j| spectrum.eigenvectors()[(i, null[j])]);
    let support = OrthogonalProjection::from_orthonormal(basis);
    let sum = a.psd_part.matrix() + b.psd_part.matrix();
    DegenerateForm::from_operator(support, &sum)
}

/// `[e^{-ta/n} e^{-tb/n}]^n`.
pub fn kato_step_product(a: &DegenerateForm, b: &DegenerateForm, t: f64, n: u64) -> CMatrix {
    let tau = t / n as f64;
    matrix_power(&(a.semigroup(tau) * b.semigroup(tau)), n)
}

/// Convergence of the form-sum product to `e^{-t(a+b)}`.
pub fn kato_form_sum_product(
    a: &DegenerateForm,
    b: &DegenerateForm,
    t: f64,
    n_values: &[u64],
) -> Result<ZenoConvergenceReport> {
    ensure_dim(a.dim(), b.dim())?;
    check_time(t)?;
    check_schedule(n_values)?;
    let target = form_sum_operator(a, b)?.semigroup(t);
    convergence_report(n_values, target, |n| Ok(kato_step_product(a, b, t, n)))
}

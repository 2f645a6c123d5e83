//! Dense complex operator algebra.
//!
//! Hermitian eigendecomposition, matrix exponentials at real and complex
//! time, operator norms, PSD square roots and orthogonal projections.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::policy::Tolerances;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest argument accepted by `f64::exp` without overflow.
pub(crate) const EXP_LIMIT: f64 = 709.0;

pub(crate) fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.nrows() == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_finite_matrix(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub(crate) fn ensure_finite_vector(v: &CVector) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Builds a diagonal matrix from real entries.
pub fn diag(entries: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        entries.len(),
        entries.iter().map(|&x| C64::new(x, 0.0)),
    ))
}

/// Builds a matrix from rows of complex entries.
pub fn from_rows(rows: &[&[C64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn pauli_x() -> CMatrix {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    from_rows(&[&[o, l], &[l, o]])
}

/// Computational basis vector `e_index` in `C^dim`.
pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = C64::new(1.0, 0.0);
    v
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Integer power by repeated squaring.
pub fn matrix_power(m: &CMatrix, mut n: u64) -> CMatrix {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Dense self-adjoint matrix together with its eigendecomposition.
///
/// Eigenvalues are stored ascending; the eigenvector matrix is unitary and
/// holds the eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        eigendecompose_with(&matrix, &Tolerances::default())
    }

    pub fn from_real_diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(diag(entries))
    }

    /// Assembles an operator from an already known spectral decomposition.
    pub(crate) fn from_spectrum(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> Self {
        let matrix = spectral_sum(&eigenvectors, eigenvalues.iter().map(|&l| C64::new(l, 0.0)));
        Self { matrix: hermitize(&matrix), eigenvalues, eigenvectors }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Width of the spectrum, `max - min`.
    pub fn spread(&self) -> f64 {
        self.max_eigenvalue() - self.min_eigenvalue()
    }

    /// Operator norm, `max |lambda|`.
    pub fn norm(&self) -> f64 {
        self.min_eigenvalue().abs().max(self.max_eigenvalue().abs())
    }

    /// `V diag(f(lambda)) V^dagger`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        spectral_sum(&self.eigenvectors, self.eigenvalues.iter().map(|&l| f(l)))
    }

    /// Expectation value `<psi, H psi>` (real part).
    pub fn expectation(&self, psi: &CVector) -> f64 {
        psi.dotc(&(&self.matrix * psi)).re
    }
}

fn spectral_sum(vectors: &CMatrix, values: impl Iterator<Item = C64>) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, f) in values.enumerate() {
        for z in scaled.column_mut(j).iter_mut() {
            *z *= f;
        }
    }
    scaled * vectors.adjoint()
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).unscale(2.0)
}

/// Eigendecomposition of a Hermitian matrix with default tolerances.
pub fn eigendecompose(m: &CMatrix) -> Result<HermitianOperator> {
    eigendecompose_with(m, &Tolerances::default())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The Hermitian check uses the Frobenius norm: `|M - M^dagger|_F <= tol * (1 + |M|_F)`.
/// The stored matrix is the exactly Hermitian part `(M + M^dagger) / 2`.
pub fn eigendecompose_with(m: &CMatrix, tol: &Tolerances) -> Result<HermitianOperator> {
    let dim = ensure_square(m)?;
    ensure_finite_matrix(m)?;
    let scale = 1.0 + m.norm();
    let asymmetry = (m - m.adjoint()).norm();
    let bound = tol.hermitian * scale;
    if asymmetry > bound {
        return Err(Error::NotHermitian { asymmetry, tolerance: bound });
    }
    let matrix = hermitize(m);
    let eig = matrix.clone().symmetric_eigen();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = CMatrix::from_fn(dim, dim, |i, j| eig.eigenvectors[(i, order[j])]);

    let op = HermitianOperator { matrix, eigenvalues, eigenvectors };
    let reconstruction = (op.apply_fn(|l| C64::new(l, 0.0)) - &op.matrix).norm();
    if reconstruction > tol.reconstruction * scale {
        return Err(Error::EigenFailure { residual: reconstruction });
    }
    let unitarity = (op.eigenvectors.adjoint() * &op.eigenvectors - identity(dim)).norm();
    if unitarity > tol.unitarity {
        return Err(Error::EigenFailure { residual: unitarity });
    }
    Ok(op)
}

/// `e^{i z H}` at complex time `z`, evaluated in the eigenbasis.
pub fn evolve(h: &HermitianOperator, z: C64) -> Result<CMatrix> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    // |e^{i z lambda}| = e^{-Im(z) lambda}
    let exponent = h
        .eigenvalues
        .iter()
        .map(|&l| -z.im * l)
        .fold(f64::NEG_INFINITY, f64::max);
    if exponent > EXP_LIMIT {
        return Err(Error::Overflow { exponent });
    }
    let iz = C64::i() * z;
    Ok(h.apply_fn(|l| (iz * l).exp()))
}

/// `e^{i t H}` at real time.
pub fn evolve_real(h: &HermitianOperator, t: f64) -> CMatrix {
    let it = C64::new(0.0, t);
    h.apply_fn(|l| (it * l).exp())
}

/// Largest singular value, from the top eigenvalue of `M^dagger M`.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    ensure_finite_matrix(m)?;
    Ok(norm_unchecked(m))
}

/// Operator norm without the finiteness check.
pub fn norm_unchecked(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let f = m.norm();
    if f == 0.0 {
        return 0.0;
    }
    // Normalizing first keeps M^dagger M well scaled.
    let scaled = m.unscale(f);
    let gram = hermitize(&(scaled.adjoint() * &scaled));
    let top = gram
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);
    top.max(0.0).sqrt() * f
}

/// Principal square root of a positive semidefinite operator.
pub fn psd_sqrt(h: &HermitianOperator) -> Result<HermitianOperator> {
    psd_sqrt_with(h, &Tolerances::default())
}

pub fn psd_sqrt_with(h: &HermitianOperator, tol: &Tolerances) -> Result<HermitianOperator> {
    let min = h.min_eigenvalue();
    if min < -tol.psd_floor * (1.0 + h.norm()) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let roots = h.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok(HermitianOperator::from_spectrum(roots, h.eigenvectors.clone()))
}

/// Matrix exponential `e^M`.
///
/// Hermitian and skew-Hermitian inputs go through the Hermitian
/// eigendecomposition, other normal inputs through a complex Schur form, and
/// everything else through scaling and squaring with Pade approximants.
pub fn expm(m: &CMatrix) -> Result<CMatrix> {
    ensure_square(m)?;
    ensure_finite_matrix(m)?;
    let fro = m.norm();
    if fro == 0.0 {
        return Ok(identity(m.nrows()));
    }
    let adj = m.adjoint();
    let herm_tol = 1e-14 * (1.0 + fro);
    if (m - &adj).norm() <= herm_tol {
        let h = HermitianOperator::new(hermitize(m))?;
        return Ok(h.apply_fn(|l| C64::new(l.exp(), 0.0)));
    }
    if (m + &adj).norm() <= herm_tol {
        let k = HermitianOperator::new(hermitize(&(m * C64::new(0.0, -1.0))))?;
        return Ok(k.apply_fn(|l| C64::new(0.0, l).exp()));
    }
    let normality = (m * &adj - &adj * m).norm();
    if normality <= 1e-12 * fro * fro {
        if let Some(result) = expm_normal(m) {
            return Ok(result);
        }
    }
    expm_pade(m)
}

fn expm_normal(m: &CMatrix) -> Option<CMatrix> {
    let schur = Schur::try_new(m.clone(), 1e-15, 10_000)?;
    let (q, t) = schur.unpack();
    let off: f64 = t.norm_squared() - t.diagonal().norm_squared();
    if off.abs().sqrt() > 1e-10 * (1.0 + t.norm()) {
        return None;
    }
    let d = t.diagonal();
    Some(spectral_sum(&q, d.iter().map(|z| z.exp())))
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152e0;

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Scaling-and-squaring matrix exponential with degree 3 to 13 Pade
/// approximants selected by the 1-norm.
pub fn expm_pade(m: &CMatrix) -> Result<CMatrix> {
    let dim = ensure_square(m)?;
    ensure_finite_matrix(m)?;
    let id = identity(dim);
    let norm1 = one_norm(m);

    for &(degree, theta) in THETA.iter() {
        if norm1 <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let a2 = m * m;
            let mut powers = vec![id.clone(), a2.clone()];
            for _ in 2..=degree / 2 {
                let next = powers.last().unwrap() * &a2;
                powers.push(next);
            }
            let mut u = CMatrix::zeros(dim, dim);
            let mut v = CMatrix::zeros(dim, dim);
            for (k, p) in powers.iter().enumerate() {
                v += p * C64::new(coeffs[2 * k], 0.0);
                u += p * C64::new(coeffs[2 * k + 1], 0.0);
            }
            let u = m * u;
            return pade_solve(&u, &v);
        }
    }

    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = m.unscale(2f64.powi(squarings));
    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    ensure_finite_matrix(&r)?;
    Ok(r)
}

fn pade_solve(u: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    let p = v + u;
    let q = v - u;
    q.lu().solve(&p).ok_or(Error::NonFinite)
}

/// Orthogonal projection together with an orthonormal basis of its range.
#[derive(Debug, Clone)]
pub struct OrthogonalProjection {
    matrix: CMatrix,
    rank: usize,
    basis: CMatrix,
}

impl OrthogonalProjection {
    /// Validates `p` as an orthogonal projection.
    pub fn new(p: CMatrix) -> Result<Self> {
        Self::new_with(p, &Tolerances::default())
    }

    pub fn new_with(p: CMatrix, tol: &Tolerances) -> Result<Self> {
        let dim = ensure_square(&p)?;
        ensure_finite_matrix(&p)?;
        let adjoint_gap = (&p - p.adjoint()).norm();
        if adjoint_gap > tol.projection_adjoint * (1.0 + p.norm()) {
            return Err(Error::NotProjection { reason: format!("not self-adjoint ({adjoint_gap:e})") });
        }
        let idempotent_gap = (&p * &p - &p).norm();
        if idempotent_gap > tol.idempotent {
            return Err(Error::NotProjection { reason: format!("not idempotent ({idempotent_gap:e})") });
        }
        let trace = p.trace().re;
        let rank = trace.round();
        if (trace - rank).abs() > tol.rank_trace {
            return Err(Error::NotProjection { reason: format!("non-integral trace {trace}") });
        }
        let rank = rank as usize;
        let eig = HermitianOperator::new(hermitize(&p))?;
        let basis = eig.eigenvectors.columns(dim - rank, rank).into_owned();
        Ok(Self { matrix: hermitize(&p), rank, basis })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: identity(dim), rank: dim, basis: identity(dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Self { matrix: CMatrix::zeros(dim, dim), rank: 0, basis: CMatrix::zeros(dim, 0) }
    }

    /// Builds the projection from an orthonormal set of columns.
    pub(crate) fn from_orthonormal(basis: CMatrix) -> Self {
        let matrix = hermitize(&(&basis * basis.adjoint()));
        let rank = basis.ncols();
        Self { matrix, rank, basis }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Orthonormal basis of the range, `dim x rank`.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// `I - P`.
    pub fn complement(&self) -> Self {
        let dim = self.dim();
        let q = identity(dim) - &self.matrix;
        let mut basis = CMatrix::zeros(dim, dim - self.rank);
        if dim > self.rank {
            let eig = HermitianOperator::new(hermitize(&q)).expect("complement of a projection is Hermitian");
            basis = eig.eigenvectors.columns(self.rank, dim - self.rank).into_owned();
        }
        Self { matrix: hermitize(&q), rank: dim - self.rank, basis }
    }

    /// `P A P`.
    pub fn compress(&self, a: &CMatrix) -> CMatrix {
        &self.matrix * a * &self.matrix
    }

    /// Norm of the part of `v` outside the range.
    pub fn leakage(&self, v: &CVector) -> f64 {
        (v - &self.matrix * v).norm()
    }
}

/// Projection onto the span of `vectors`.
pub fn projection_from_span(vectors: &[CVector]) -> Result<OrthogonalProjection> {
    projection_from_span_with(vectors, &Tolerances::default())
}

pub fn projection_from_span_with(vectors: &[CVector], tol: &Tolerances) -> Result<OrthogonalProjection> {
    let first = vectors.first().ok_or(Error::ZeroSpan)?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::EmptyMatrix);
    }
    for v in vectors {
        ensure_dim(dim, v.len())?;
        ensure_finite_vector(v)?;
    }
    let a = CMatrix::from_columns(vectors);
    let largest = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if largest < 1e-14 {
        return Err(Error::ZeroSpan);
    }
    let svd = a.svd(true, false);
    let u = svd.u.ok_or(Error::ZeroSpan)?;
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > tol.rank_cutoff * smax)
        .collect();
    let basis = CMatrix::from_fn(dim, keep.len(), |i, j| u[(i, keep[j])]);
    Ok(OrthogonalProjection::from_orthonormal(orthonormalize(basis)))
}

/// Re-orthonormalizes columns by modified Gram-Schmidt.
fn orthonormalize(mut q: CMatrix) -> CMatrix {
    for j in 0..q.ncols() {
        for k in 0..j {
            let proj = q.column(k).dotc(&q.column(j));
            let col_k = q.column(k).into_owned();
            let mut col_j = q.column_mut(j);
            col_j -= col_k * proj;
        }
        let n = q.column(j).norm();
        q.column_mut(j).unscale_mut(n);
    }
    q
}

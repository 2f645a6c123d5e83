//! Numerical tolerances shared by the validation checks in this crate.
//!
//! Every check is absolute-plus-relative: a quantity `r` derived from an
//! operator of size `s` passes when `r <= tol * (1 + s)`. The defaults below
//! can be tightened or relaxed as a whole through [`Tolerances::scaled`].

/// Tolerance set used by operator construction and validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Bound on `|M - M^dagger|` for a matrix to count as Hermitian.
    pub hermitian: f64,
    /// Bound on the eigendecomposition reconstruction residual.
    pub reconstruction: f64,
    /// Bound on `|V^dagger V - I|` for computed eigenvectors.
    pub unitarity: f64,
    /// Bound on `|P^2 - P|` for projections.
    pub idempotent: f64,
    /// Bound on `|P - P^dagger|` for projections.
    pub projection_adjoint: f64,
    /// Allowed distance between a projection's trace and its integer rank.
    pub rank_trace: f64,
    /// Eigenvalues above `-psd_floor` are clamped to zero by PSD operations.
    pub psd_floor: f64,
    /// Relative singular-value threshold for rank decisions.
    pub rank_cutoff: f64,
    /// Tolerance for normalization of state vectors.
    pub normalization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            reconstruction: 1e-10,
            unitarity: 1e-10,
            idempotent: 1e-10,
            projection_adjoint: 1e-12,
            rank_trace: 1e-8,
            psd_floor: 1e-10,
            rank_cutoff: 1e-10,
            normalization: 1e-10,
        }
    }
}

impl Tolerances {
    /// Multiplies every tolerance by `factor`.
    pub fn scaled(factor: f64) -> Self {
        let d = Self::default();
        Self {
            hermitian: d.hermitian * factor,
            reconstruction: d.reconstruction * factor,
            unitarity: d.unitarity * factor,
            idempotent: d.idempotent * factor,
            projection_adjoint: d.projection_adjoint * factor,
            rank_trace: d.rank_trace * factor,
            psd_floor: d.psd_floor * factor,
            rank_cutoff: d.rank_cutoff * factor,
            normalization: d.normalization * factor,
        }
    }
}

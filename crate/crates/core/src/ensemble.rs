//! Seeded random operators and states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::operator::{
    norm_unchecked, projection_from_span, CMatrix, CVector, HermitianOperator, OrthogonalProjection, C64,
};

/// Deterministic generator for a `(seed, stream)` pair.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_c64(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre matrix with standard complex Gaussian entries.
pub fn ginibre(dim: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng))
}

pub fn random_vector(dim: usize, rng: &mut impl Rng) -> CVector {
    CVector::from_fn(dim, |_, _| gaussian_c64(rng))
}

/// Uniformly random unit vector.
pub fn random_state(dim: usize, rng: &mut impl Rng) -> CVector {
    let v = random_vector(dim, rng);
    let n = v.norm();
    v.unscale(n)
}

/// Random Hermitian matrix rescaled to operator norm exactly `norm`.
pub fn random_hermitian(dim: usize, norm: f64, rng: &mut impl Rng) -> Result<HermitianOperator> {
    let g = ginibre(dim, rng);
    let h = (&g + g.adjoint()).unscale(2.0);
    let scale = norm_unchecked(&h);
    HermitianOperator::new(h * C64::new(norm / scale, 0.0))
}

/// Random positive semidefinite matrix `G^dagger G`, rescaled to norm `norm`.
pub fn random_psd(dim: usize, norm: f64, rng: &mut impl Rng) -> Result<HermitianOperator> {
    let g = ginibre(dim, rng);
    let h = g.adjoint() * &g;
    let h = (&h + h.adjoint()).unscale(2.0);
    let scale = norm_unchecked(&h);
    HermitianOperator::new(h * C64::new(norm / scale, 0.0))
}

/// Random unitary from the QR factorization of a Ginibre matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let qr = ginibre(dim, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column phases so the distribution is Haar
    let mut q = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// Projection onto the span of `rank` random vectors.
pub fn random_projection(dim: usize, rank: usize, rng: &mut impl Rng) -> Result<OrthogonalProjection> {
    if rank == 0 {
        return Ok(OrthogonalProjection::zero(dim));
    }
    let vectors: Vec<CVector> = (0..rank).map(|_| random_vector(dim, rng)).collect();
    projection_from_span(&vectors)
}

/// Seeded bounded Zeno case: `dim = 2 + seed mod 7`, rank in `1..dim`,
/// `‖H‖ = 1`. Used by the convergence checks so every caller sees the same
/// ensemble.
pub fn zeno_case(seed: u64) -> Result<(HermitianOperator, OrthogonalProjection)> {
    let mut rng = seeded_rng(seed, 0);
    let dim = 2 + (seed % 7) as usize;
    let rank = 1 + (seed as usize % (dim - 1));
    let h = random_hermitian(dim, 1.0, &mut rng)?;
    let e = random_projection(dim, rank, &mut rng)?;
    Ok((h, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_streams() {
        let a = random_hermitian(4, 1.0, &mut seeded_rng(7, 0)).unwrap();
        let b = random_hermitian(4, 1.0, &mut seeded_rng(7, 0)).unwrap();
        let c = random_hermitian(4, 1.0, &mut seeded_rng(7, 1)).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_ne!(a.matrix(), c.matrix());
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unitary_and_projection_shapes() {
        let mut rng = seeded_rng(1, 2);
        let u = random_unitary(5, &mut rng);
        assert!((u.adjoint() * &u - CMatrix::identity(5, 5)).norm() < 1e-12);
        let p = random_projection(6, 3, &mut rng).unwrap();
        assert_eq!(p.rank(), 3);
        let psd = random_psd(5, 2.0, &mut rng).unwrap();
        assert!(psd.min_eigenvalue() > -1e-12);
        assert!((psd.norm() - 2.0).abs() < 1e-12);
        assert!((random_state(4, &mut rng).norm() - 1.0).abs() < 1e-14);
    }
}

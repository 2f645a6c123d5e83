//! Finite-dimensional quantum Zeno laboratory.
//!
//! Iterated-measurement products and their Zeno limits, degenerate product
//! formulas for semigroups, survival-probability and decay-rate analytics,
//! tail classification of energy distributions, and Gibbs/KMS checks on
//! compressed algebras.

// `!(x > y)` is used throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod fit;
pub mod gibbs;
pub mod operator;
pub mod policy;
pub mod quadrature;
pub mod semigroup;
pub mod spectral;
pub mod survival;
pub mod zeno;

pub use error::{Error, Result};
pub use operator::{
    eigendecompose, evolve, expm, operator_norm, projection_from_span, psd_sqrt, CMatrix, CVector,
    HermitianOperator, OrthogonalProjection, C64,
};
pub use policy::Tolerances;
pub use spectral::{Family, Regime, SpectralMeasure};
pub use survival::Extended;
pub use zeno::{ProductOrdering, ZenoConvergenceReport, ZenoSchedule};

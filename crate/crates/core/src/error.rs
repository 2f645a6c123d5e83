use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has zero dimension")]
    EmptyMatrix,

    #[error("non-finite entry encountered")]
    NonFinite,

    #[error("matrix is not Hermitian: asymmetry {asymmetry:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("eigendecomposition failed validation: residual {residual:e}")]
    EigenFailure { residual: f64 },

    #[error("exponential would overflow: exponent {exponent:e}")]
    Overflow { exponent: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("all spanning vectors are numerically zero")]
    ZeroSpan,

    #[error("not an orthogonal projection: {reason}")]
    NotProjection { reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized: norm {norm}")]
    NotNormalized { norm: f64 },

    #[error("probe state leaves the range of the projection: leakage {leakage:e}")]
    ProbeOutsideRange { leakage: f64 },

    #[error("projection has rank zero")]
    ZeroRank,

    #[error("generator routes disagree: residual {residual:e}")]
    RouteMismatch { residual: f64 },

    #[error("operator is not sectorial at angle {angle}: margin {margin:e}")]
    NotSectorial { angle: f64, margin: f64 },

    #[error("evolution is not smooth at t=0: Richardson discrepancy {discrepancy:e}")]
    NotSmooth { discrepancy: f64 },

    #[error("survival probability {probability:e} at t={time} is not positive")]
    NonpositiveProbability { time: f64, probability: f64 },

    #[error("fit window holds {found} samples, need at least {required}")]
    WindowTooSmall { found: usize, required: usize },

    #[error("fit window ends at {window_end} beyond half the Heisenberg time {limit}")]
    BeyondHeisenbergTime { window_end: f64, limit: f64 },

    #[error("decay is not exponential on the window: log residual {residual}")]
    NonExponential { residual: f64 },

    #[error("no crossing of the natural rate on the sampled range (gamma_eff in [{min}, {max}])")]
    NoCrossing { min: f64, max: f64 },

    #[error("quadrature did not converge: estimated error {error_bound:e}")]
    QuadratureFailure { error_bound: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

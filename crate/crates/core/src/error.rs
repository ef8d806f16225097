use thiserror::Error;

use crate::numerics::IntegrationResult;

/// Errors for the measurement-fidelity computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature did not converge: best estimate {} with error bound {} after {} evaluations",
            .best.value, .best.error_estimate, .best.evaluations)]
    QuadratureNonConvergence { best: IntegrationResult },

    #[error("invalid tolerance: rel={rel}, abs={abs} (need rel > 0 or abs > 0, both finite)")]
    InvalidTolerance { rel: f64, abs: f64 },

    #[error("standard deviation must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("quadrature order must be at least 2, got {0}")]
    QuadratureOrderTooSmall(usize),

    #[error("log-gamma requires a positive finite argument, got {0}")]
    LogGammaDomain(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tail mass must lie strictly between 0 and 1, got {0}")]
    InvalidTailMass(f64),

    #[error("joint pmf not normalized: sums to {sum} (deficit {deficit:e})")]
    UnnormalizedJoint { sum: f64, deficit: f64 },

    #[error("joint pmf entry ({row},{col}) is negative: {value}")]
    NegativeJointEntry { row: usize, col: usize, value: f64 },

    #[error("prior density invalid: {0}")]
    InvalidPrior(String),

    #[error("channel truncation tail {tail:e} contributes {tail_bits:e} bits, above tolerance {tol_bits:e}")]
    TruncationExceedsTolerance {
        tail: f64,
        tail_bits: f64,
        tol_bits: f64,
    },

    #[error("observation impossible under model: likelihood vanishes over the prior support")]
    ImpossibleObservation,

    #[error("candidate grid is empty")]
    EmptyCandidateGrid,

    #[error("all candidate evaluations failed")]
    AllCandidatesFailed,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("POVM elements do not sum to identity (max deviation {0:e})")]
    PovmIncomplete(f64),

    #[error("Fisher information diverges: outcome {outcome} has zero probability but nonzero derivative {derivative:e}")]
    DivergentFisher { outcome: usize, derivative: f64 },

    #[error("finite-difference derivative inconsistent between step sizes (relative gap {0:e})")]
    DerivativeInconsistent(f64),

    #[error("SLD residual {0:e} exceeds 1e-8 on the state support")]
    SldResidual(f64),

    #[error("sample batch must be nonempty")]
    EmptySampleBatch,

    #[error("binning needs at least 2 bins per binned axis, got {0}")]
    TooFewBins(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

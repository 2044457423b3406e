//! Approximation of plane points by `SL(2, Z)` orbits.
//!
//! The crate builds unimodular matrices `γ` for which `γx` comes close to a
//! target `y`, certifies the accompanying inequalities with exact arithmetic,
//! and provides a brute-force oracle plus empirical exponent estimates to
//! check them against.

pub mod analysis;
pub mod constructions;
pub mod contfrac;
pub mod real;
pub mod sl2;

use thiserror::Error;

pub use analysis::{
    estimate_exponents, staircase, theory_exponents, upper_bound_exponents_rational,
    verify_lemma1, verify_theorem4, Certificate, ExponentEstimate, RecordSequence, StaircaseSource,
    Window,
};
pub use constructions::{
    approx_irrational_slope, approx_origin, approx_rational_slope, approx_signed, build_gamma,
    choose_ell_ceiling, choose_ell_truncate, normalize, rho, select_indices_large_omega,
    select_indices_small_omega, select_indices_uniform, ApproxResult, Bound, NormalizedPair,
    SignedReport, TargetSlope, Trace,
};
pub use contfrac::{ContinuedFraction, Convergent, ConvergentMatrix, Omega, OmegaWindow};
pub use real::{QuadSurd, RealInput, RealValue};
pub use sl2::{enumerate_norm_bounded, factorize, Factorization, PlanePoint, UnimodularMatrix};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precision exhausted at {bits} bits: {context}")]
    PrecisionExhausted { context: String, bits: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("rational input: the continued fraction terminates after {0} quotients")]
    RationalInput(usize),
    #[error("slope is rational")]
    SlopeRational,
    #[error("second row of N has s = 0")]
    ZeroRow,
    #[error("bound violated: {0}")]
    BoundViolated(String),
    #[error("k = {k} too small: {detail}")]
    KTooSmall { k: usize, detail: String },
    #[error("no index in {0} satisfies the growth condition")]
    StreamEmpty(String),
    #[error("target must lie in the open positive quadrant and x₂ must be positive")]
    WrongQuadrant,
    #[error("k = {0} is even; the signed construction needs odd k")]
    EvenK(usize),
    #[error("bound not yet reached at k = {}: {}", .0.k, .0.summary())]
    BoundNotYetReached(Box<SignedReport>),
    #[error("norm bound {requested} exceeds the oracle cap {cap}")]
    CapExceeded { requested: u64, cap: u64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

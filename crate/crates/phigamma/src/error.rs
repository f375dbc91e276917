//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice rank {rank} exceeds the configured bound {bound}")]
    DimensionTooLarge { rank: usize, bound: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("toric map does not carry the source cone into the target cone")]
    IncompatibleCones,
    #[error("precision windows differ")]
    WindowMismatch,
    #[error("pibar exponent fell below the window floor")]
    WindowUnderflow,
    #[error("toric exponent exceeds the window bound")]
    ToricOverflow,
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("p-adic precision insufficient to determine binomial coefficients")]
    InsufficientPadicPrecision,
    #[error("Witt vector lengths differ")]
    LengthMismatch,
    #[error("operation requires coefficient field F_p (q = p)")]
    UnsupportedCoefficientField,
    #[error("element has non-integral exponents")]
    NonIntegralExponent,
    #[error("radius exceeds the measured threshold r0 = {r0}")]
    RadiusTooLarge { r0: String },
    #[error("element is not a unit")]
    NotAUnit,
    #[error("element has no strictly dominant term and cannot be inverted at this precision")]
    NotInvertible,
    #[error("gamma elements carry different p-adic precisions")]
    PrecisionMismatch,
    #[error("group element lies outside the convergence domain U_2")]
    NotInConvergenceDomain,
    #[error("iterate degree {d} is not a multiple of the Frobenius power {a}")]
    IncompatiblePower { d: u32, a: u32 },
    #[error("valuation of a matrix entry is masked by truncation")]
    ValuationUnknown,
    #[error("extension search exceeded the cap k = {cap} (existence is not refuted)")]
    SearchCapExceeded { cap: u32 },
    #[error("operators do not commute")]
    NonCommutingOperators,
    #[error("lattice saturation diverged; slope spread {spread}")]
    SaturationDiverged { spread: String },
    #[error("dominance failure: {0}")]
    DominanceFailure(String),
    #[error("descent iteration violated its valuation schedule: {0}")]
    NonConvergence(String),
    #[error("phi/gamma matrices fail the compatibility relations")]
    CommutationFailure,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

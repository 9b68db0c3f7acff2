use thiserror::Error;

/// Crate-wide error type.
///
/// Mathematical "no" answers (a non-divisible isogeny, an inert prime) are
/// not errors; operations that can answer "no" return a dedicated enum
/// instead. Errors signal violated preconditions or desk-scale caps.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input exceeds the configured desk-scale bound: {0}")]
    InputTooLarge(String),
    #[error("moduli are not pairwise coprime")]
    NotCoprime,
    #[error("torsion E[{m}] not reachable within extension degree cap {cap}")]
    TorsionUnreachable { m: u128, cap: u32 },
    #[error("operation requires extension degree {need} beyond cap {cap}")]
    ExtensionCap { need: u32, cap: u32 },
    #[error("kernel point does not have the stated order")]
    BadKernelOrder,
    #[error("point order does not divide the pairing level")]
    OrderMismatch,
    #[error("inseparable isogenies are not supported here")]
    InseparableUnsupported,
    #[error("degree {0} does not factor over the configured prime set")]
    NotSmooth(u128),
    #[error("gcd violation: {0}")]
    GcdViolation(String),
    #[error("discriminant {0} exceeds the enumeration cap")]
    DiscCap(i128),
    #[error("quadratic forms have different discriminants")]
    DiscMismatch,
    #[error("prime {0} divides the conductor")]
    ConductorClash(i128),
    #[error("theta has no eigenspace for the requested eigenvalue (inert or invalid ideal)")]
    EigenspaceMissing,
    #[error("a non-scalar endomorphism is required")]
    NonScalarRequired,
    #[error("no split primes of norm <= {0}; the generator set is empty")]
    NoSplitPrimes(u64),
    #[error("hidden-shift group of order {0} exceeds the toy cap")]
    GroupTooLarge(u128),
    #[error("functions are not shifts of one another (different orbits)")]
    NoShift,
    #[error("no solution: inputs lie in different orbits")]
    NoSolution,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

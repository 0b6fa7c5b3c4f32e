use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input: improper transfer function, pole on the unit circle, bad parameters.
    InvalidInput,
    /// Input is well formed but an analysis precondition does not hold.
    Precondition,
    /// An internal post-hoc verification or numerical routine failed.
    Verification,
}

impl ErrorClass {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::InvalidInput => 2,
            ErrorClass::Precondition => 3,
            ErrorClass::Verification => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::InvalidInput => "invalid_input",
            ErrorClass::Precondition => "precondition",
            ErrorClass::Verification => "verification",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty coefficient sequence")]
    EmptyPolynomial,
    #[error("non-finite coefficient {0}")]
    NonFinite(f64),
    #[error("undefined roots: zero polynomial")]
    UndefinedRoots,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },
    #[error("pole hit at z = {re} + {im}j")]
    PoleHit { re: f64, im: f64 },
    #[error("not in RL-infinity: pole at {re} + {im}j lies on the unit circle")]
    NotInRLInf { re: f64, im: f64 },
    #[error("zero or pole on the unit circle at omega = {0}")]
    SingularFrequency(f64),
    #[error("not in G: system has no unstable pole")]
    NotInG,
    #[error("degenerate crossing near omega = {0}")]
    DegenerateCrossing(f64),
    #[error("epsilon_+ not found: crossing counts disagree across sweep {0:?}")]
    EpsilonSweep(Vec<(f64, i64)>),
    #[error("ill-posed loop: characteristic polynomial {0}")]
    IllPosedLoop(&'static str),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("synthesis verification failed: {0}")]
    SynthesisVerification(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("numerical fault: {0}")]
    NumericalFault(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            EmptyPolynomial
            | NonFinite(_)
            | UndefinedRoots
            | ZeroDenominator
            | Improper { .. }
            | PoleHit { .. }
            | NotInRLInf { .. }
            | SingularFrequency(_)
            | InvalidParameter(_) => ErrorClass::InvalidInput,
            NotInG | Precondition(_) | IllPosedLoop(_) => ErrorClass::Precondition,
            DegenerateCrossing(_)
            | EpsilonSweep(_)
            | SynthesisVerification(_)
            | NoConvergence(_)
            | NumericalFault(_) => ErrorClass::Verification,
        }
    }
}

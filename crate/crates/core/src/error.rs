use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("working level must be positive")]
    ZeroLevel,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("value is not p-integral")]
    NotPIntegral,
    #[error("input must be nonzero")]
    ZeroInput,
    #[error("coset 0*P_n has no shells")]
    ZeroCoset,

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("zero denominator in literal at byte {offset}")]
    ZeroDenominatorLiteral { offset: usize },
    #[error("val() of a vanishing polynomial")]
    ValOfZero,
    #[error("negative power of a vanishing norm")]
    ZeroToNegativePower,
    #[error("expected at least {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("bound of level {level} vanishes at this base point")]
    BoundVanished { level: usize },
    #[error("malformed cell: {0}")]
    MalformedCell(String),
    #[error("cell data is not constant")]
    NonConstantCell,
    #[error("certificate mismatch: {0}")]
    CertificateMismatch(String),

    #[error("series diverges")]
    Divergent,
    #[error("power-sum exponent {0} exceeds the supported maximum")]
    ExponentTooLarge(u32),
    #[error("invalid term: {0}")]
    InvalidTerm(String),

    #[error("enumeration of {required} points exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("map coefficients must be p-integral")]
    NonIntegralCoefficients,
    #[error("need at least {0} levels")]
    TooFewLevels(usize),
    #[error("{0} is not coprime to p")]
    NotCoprime(i64),
    #[error("every sample vanished; the fit is undefined")]
    AllVanished,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

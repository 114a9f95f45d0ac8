use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("a point needs at least one coordinate")]
    EmptyPoint,
    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shift matrix is not upper unitriangular at entry ({row}, {col})")]
    NotUnitriangular { row: usize, col: usize },
    #[error("shift entry ({row}, {col}) has denominator {denominator}, above the limit of 65536")]
    DenominatorOverflow {
        row: usize,
        col: usize,
        denominator: i64,
    },
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("invalid {name} = {value}: expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("certificate r = {r} is outside 1..=2^{ell}")]
    CertificateOutOfRange { ell: u32, r: u64 },
    #[error("certificate length {found} does not match the required {expected} bits")]
    CertificateLength { expected: u32, found: u32 },
    #[error("expected {expected} certificate blocks, got {found}")]
    BlockCount { expected: usize, found: usize },
    #[error("a statistical-query program needs at least one query")]
    EmptyQueryList,
    #[error("expected a {expected} program")]
    ProgramMode { expected: &'static str },
    #[error("partition in dimension {dim} has no verified profile")]
    Unverified { dim: usize },
    #[error("partition failed verification: {0}")]
    VerificationFailed(String),
    #[error("invalid partition file: {0}")]
    SpecFile(String),
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

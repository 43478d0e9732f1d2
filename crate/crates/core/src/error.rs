//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("horizontal fault at cell ({0}, {1}, {2}): top corner depth differs from the bottom corner of the layer above")]
    HorizontalFaultViolation(usize, usize, usize),

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("overflow risk: {0} exceeds the 62-bit working range")]
    OverflowRisk(String),

    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },

    #[error("length mismatch in {keyword}: expected {expected} values, got {actual}")]
    LengthMismatch {
        keyword: String,
        expected: usize,
        actual: usize,
    },

    #[error("grid dimensions (SPECGRID/DIMENS) must precede data arrays")]
    MissingDims,

    #[error("invalid generator spec: {0}")]
    SpecInvalid(String),

    #[error("corrupt lifting pair: {0}")]
    CorruptPair(String),

    #[error("corrupt detail data: {0}")]
    CorruptDetail(String),

    #[error("categorical value {0} outside the declared class universe")]
    ValueOutsideUniverse(i64),

    #[error("unreconstructible categorical detail: approximation {approx} with detail {detail} lands outside the universe both ways")]
    Unreconstructible { approx: i64, detail: i64 },

    #[error("level {requested} out of range (valid: -{max}..=0)")]
    LevelOutOfRange { requested: i32, max: u32 },

    #[error("missing chunk: {0}")]
    MissingChunk(String),

    #[error("checksum mismatch in chunk {0}")]
    ChecksumMismatch(String),

    #[error("bad container magic")]
    BadMagic,

    #[error("unsupported container version {major}.{minor}")]
    VersionUnsupported { major: u16, minor: u16 },

    #[error("codec {0:?} is not registered")]
    CodecUnavailable(String),

    #[error("slab coverage gap: {0}")]
    SlabCoverageGap(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable process exit code contract: 0 success, 1 I/O, 2 usage/range,
    /// 3 data corruption.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Io(_) => 1,
            LevelOutOfRange { .. } | SpecInvalid(_) | CodecUnavailable(_) | MissingDims
            | SlabCoverageGap(_) => 2,
            _ => 3,
        }
    }
}

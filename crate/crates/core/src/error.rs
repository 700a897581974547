use std::path::PathBuf;

use crate::grid::DyadicCube;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed generator spec `{0}`")]
    MalformedSpec(String),
    #[error("nonpositive value {0} in generator spec")]
    NonpositiveSpecValue(f64),
    #[error("exponent {0} <= -1 is not locally integrable")]
    NotIntegrable(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("cube {0} lies outside the grid")]
    CubeOutsideGrid(DyadicCube),
    #[error("duplicate cube {0} in family")]
    DuplicateCube(DyadicCube),
    #[error("bad cube address `{0}`")]
    BadCubeAddress(String),

    #[error("{path}: header mismatch: {detail}")]
    HeaderMismatch { path: PathBuf, detail: String },
    #[error("{path}: cell count mismatch: expected {expected}, found {found}")]
    CellCountMismatch { path: PathBuf, expected: usize, found: usize },
    #[error("{path}: nonpositive cell {value} at index {index}")]
    NonpositiveCell { path: PathBuf, index: usize, value: f64 },
    #[error("{path}: parse failure: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("t = {0} is out of range")]
    TimeOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("packing cubes {0} and {1} overlap")]
    OverlappingCubes(DyadicCube, DyadicCube),
    #[error("empty domain: {0}")]
    EmptyDomain(String),
    #[error("divergent head integral: {0}")]
    DivergentHead(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    /// Stable numeric code; the loader errors are distinct so callers can tell them apart.
    pub fn code(&self) -> u32 {
        match self {
            Error::MalformedSpec(_) => 10,
            Error::NonpositiveSpecValue(_) => 11,
            Error::NotIntegrable(_) => 12,
            Error::InvalidGrid(_) => 13,
            Error::CubeOutsideGrid(_) => 14,
            Error::DuplicateCube(_) => 15,
            Error::BadCubeAddress(_) => 16,
            Error::HeaderMismatch { .. } => 20,
            Error::CellCountMismatch { .. } => 21,
            Error::NonpositiveCell { .. } => 22,
            Error::Parse { .. } => 23,
            Error::Io { .. } => 24,
            Error::TimeOutOfRange(_) => 30,
            Error::InvalidParameter(_) => 31,
            Error::OverlappingCubes(..) => 32,
            Error::EmptyDomain(_) => 33,
            Error::DivergentHead(_) => 34,
            Error::Precondition(_) => 35,
        }
    }

    /// True for failures reading or writing weight files.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::HeaderMismatch { .. }
                | Error::CellCountMismatch { .. }
                | Error::NonpositiveCell { .. }
                | Error::Parse { .. }
                | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

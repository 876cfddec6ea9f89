use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid temporal value: {0}")]
    Temporal(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("too many malformed rows: {malformed} of {total}")]
    TooManyMalformed { malformed: usize, total: usize },
    #[error("unknown frequency {0} Hz")]
    UnknownFrequency(u32),
    #[error("source and receiver coincide (distance {0} m)")]
    NonPositiveDistance(f64),
    #[error("bathymetry does not cover the grid extent: {0}")]
    BathymetryCoverage(String),
    #[error("no station data for {frequency} Hz in {month}")]
    NoStationData { frequency: u32, month: String },
    #[error("unsupported projection EPSG:{0}")]
    UnsupportedProjection(u32),
    #[error("grid hash mismatch: file has {found:016x}, expected {expected:016x}")]
    GridMismatch { expected: u64, found: u64 },
    #[error("malformed field file: {0}")]
    FieldFormat(String),
    #[error("oracle guard exceeded: {0} evaluations")]
    OracleGuard(u128),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong between reading a manifest and writing a report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("frame {index}: {message}")]
    Frame { index: u64, message: String },

    #[error("frame {index} is not listed in the manifest")]
    UnknownFrame { index: u64 },

    #[error("landmark record{}: malformed JSON: {message}", fmt_index(*.index))]
    SidecarJson { index: Option<u64>, message: String },

    #[error("landmark record{}: expected 68 points, found {found}", fmt_index(Some(*.index)))]
    PointCount { index: u64, found: usize },

    #[error("landmark record{}: point {point} has a non-numeric coordinate", fmt_index(Some(*.index)))]
    NonNumericCoordinate { index: u64, point: usize },

    #[error("invalid landmarks: {0}")]
    InvalidLandmarks(String),

    #[error("landmark/manifest index mismatch: {0}")]
    IndexMismatch(String),

    #[error("detector process: {0}")]
    Detector(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("chip too asymmetric to composite: half width {half_width} < {min}")]
    ChipTooAsymmetric { half_width: usize, min: usize },

    #[error("image dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch {
        a: (usize, usize),
        b: (usize, usize),
    },

    #[error("image {width}x{height} is smaller than the {window}x{window} window")]
    ImageTooSmall {
        width: usize,
        height: usize,
        window: usize,
    },

    #[error("no scored frames: cannot estimate a baseline")]
    NoBaseline,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

fn fmt_index(index: Option<u64>) -> String {
    match index {
        Some(i) => format!(" {i}"),
        None => String::new(),
    }
}

impl Error {
    /// True for errors caused by bad inputs or arguments (as opposed to
    /// failures while producing outputs or broken internal contracts).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Output { .. } | Error::Contract(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

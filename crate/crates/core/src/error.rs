use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("non-finite value in tensor")]
    NonFinite,
    #[error("loss is not a scalar (shape {0:?})")]
    NotScalar(Vec<usize>),
    #[error("degenerate matrix: semi-orthogonal projection needs a nonzero input")]
    DegenerateMatrix,

    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("reference (clean) signal is identically zero")]
    ZeroReferenceSignal,
    #[error("noise signal has zero power")]
    ZeroNoiseSignal,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid perturbation factor {0}")]
    InvalidFactor(f64),

    #[error("signal too short: {len} samples, need at least {need}")]
    TooShort { len: usize, need: usize },
    #[error("unknown speaker {0:?}")]
    UnknownSpeaker(String),
    #[error("invalid mask width: {0}")]
    InvalidWidth(String),
    #[error("frame count mismatch: {0}")]
    FrameCountMismatch(String),

    #[error("unknown phone {0}")]
    UnknownPhone(usize),
    #[error("empty transcript")]
    EmptyTranscript,
    #[error("graph admits no path")]
    NoPath,
    #[error("label {label} out of range for {num_states} states")]
    LabelOutOfRange { label: usize, num_states: usize },

    #[error("utterance {0:?} missing")]
    MissingUtterance(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 2,
            Error::Io { .. }
            | Error::Parse(_)
            | Error::MissingUtterance(_)
            | Error::LengthMismatch(..)
            | Error::ZeroReferenceSignal
            | Error::ZeroNoiseSignal
            | Error::UnknownSpeaker(_)
            | Error::TooShort { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

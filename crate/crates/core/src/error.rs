use std::path::PathBuf;

use crate::synth::DistortionKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed y4m header: {0}")]
    MalformedHeader(String),

    #[error("inconsistent frame size: expected {expected:?}, got {got:?} (frame {index})")]
    InconsistentFrameSize {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("truncated stream in frame {frame}")]
    TruncatedStream { frame: usize },

    #[error("png error in {path}: {message}")]
    Png { path: PathBuf, message: String },

    #[error("clip has no frames")]
    EmptyClip,

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("level table has no entry for ({kind:?}, level {level})")]
    IncompleteLevelTable { kind: DistortionKind, level: u8 },

    #[error("manifest incomplete: {0}")]
    IncompleteManifest(String),

    #[error("record for observer {observer} does not match its plan: {reason}")]
    IncompleteRecord { observer: String, reason: String },

    #[error("no observers left to aggregate")]
    EmptyCohort,

    #[error("input is constant")]
    ConstantInput,

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("missing join for video ids: {0:?}")]
    MissingJoin(Vec<String>),

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than by the environment.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

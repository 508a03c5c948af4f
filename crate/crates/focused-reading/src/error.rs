//! Error type shared across the library.
//!
//! Invalid *inputs* (bad ids, inverted ranges, out-of-range probabilities,
//! malformed files) are surfaced as typed variants so callers can report
//! them precisely; programming errors stay as panics.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid participant id {0:?}: must be non-empty with no whitespace")]
    InvalidParticipantId(String),

    #[error("invalid document id {0:?}: must be non-empty with no whitespace")]
    InvalidDocId(String),

    #[error("participant id {0:?} uses the reserved ungrounded namespace")]
    ReservedParticipantId(String),

    #[error("need at least 2 participants, got {0}")]
    TooFewParticipants(usize),

    #[error("edge count must be positive")]
    NoEdgesRequested,

    #[error("{requested} edges exceed the simple-digraph bound of {bound} for {participants} participants")]
    EdgeBoundExceeded {
        requested: usize,
        bound: usize,
        participants: usize,
    },

    #[error("document count must be positive")]
    NoDocsRequested,

    #[error("mentions per document must be at least 2, got {0}")]
    MentionRangeTooSmall(usize),

    #[error("mention range is inverted: {min} > {max}")]
    MentionRangeInverted { min: usize, max: usize },

    #[error("probability {name} = {value} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("document {doc_id:?} annotates {participant:?} without mentioning it")]
    InteractionOutsideMentions { doc_id: String, participant: String },

    #[error("document {doc_id:?} annotates an interaction absent from the ground truth")]
    InteractionNotInGroundTruth { doc_id: String },

    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),

    #[error("corpus has no documents")]
    EmptyCorpus,

    #[error("{path}: parse error at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: unsupported {what} version {found}, expected {expected}")]
    VersionMismatch {
        path: String,
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("unknown document id {0:?}")]
    UnknownDocument(String),

    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),

    #[error("unknown participant {0:?}")]
    UnknownParticipant(String),

    #[error("source and destination must differ")]
    IdenticalEndpoints,

    #[error("iteration budget must be positive")]
    NoIterationBudget,

    #[error("pair list is empty")]
    EmptyPairs,

    #[error("not enough connected pairs: wanted {wanted}, only {available} exist")]
    NotEnoughPairs { wanted: usize, available: usize },

    #[error("train and eval pair lists overlap on {0} pair(s)")]
    OverlappingPairs(usize),

    #[error("reports cover different pair lists and cannot be compared pairwise")]
    MismatchedReports,

    #[error("resample count must be positive")]
    NoResamples,

    #[error("non-finite {what} during training: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("unknown feature group {0:?} (expected one of f1..f5)")]
    UnknownFeatureGroup(String),

    #[error("episode succeeded; there is no failure to classify")]
    NotAFailure,

    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach a file path to a bare io error for user-facing messages.
    pub fn file(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::File {
            path: path.display().to_string(),
            source,
        }
    }
}

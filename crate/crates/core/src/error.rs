//! Crate-wide error type. Everything fallible returns [`Result`].

use crate::date::Date;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // Wrapper variants leave the source out of their Display; chain-aware
    // reporters print it themselves and would otherwise show it twice.
    #[error("i/o error")]
    Io(#[from] std::io::Error),

    /// Malformed input line; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate doc_id {0}")]
    DuplicateDocId(u64),

    /// Syntactically valid date outside the supported 1990-01-01..=2100-12-31 window.
    #[error("date {0} outside supported range 1990-01-01..=2100-12-31")]
    DateOutOfRange(String),

    #[error("malformed date {0:?}, expected YYYY-MM-DD")]
    DateSyntax(String),

    /// Varbyte stream ended mid-value or encoded a value above u64 range.
    #[error("truncated or malformed varbyte stream at byte {offset}")]
    Codec { offset: usize },

    /// Input to delta coding was not strictly increasing.
    #[error("doc ids not strictly increasing at position {position}")]
    NotIncreasing { position: usize },

    /// Bad magic, impossible lengths, or other structural damage in a binary
    /// or manifest file.
    #[error("file format error: {0}")]
    FileFormat(String),

    /// index_ratio is undefined when the corpus contributed zero text bytes.
    #[error("index ratio undefined: corpus has no text")]
    EmptyCorpus,

    /// Operation only defined for one sharding mode.
    #[error("operation requires {required} sharding")]
    UnsupportedMode { required: &'static str },

    #[error("shard {0} has no available replica")]
    ShardUnavailable(u32),

    /// The same doc_id arrived from two different partial result lists.
    #[error("merge integrity violation: doc_id {0} appears in multiple partials")]
    DuplicateInMerge(u64),

    #[error("replica budget {budget} below minimum {required} (one replica per loaded shard)")]
    InfeasibleBudget { budget: u64, required: u64 },

    /// Change log append with a date earlier than the log head.
    #[error("change date {date} earlier than log head {head}")]
    DateRegression { date: Date, head: Date },

    #[error("sequence gap: expected {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },

    #[error("change {seq} references unknown doc_id {doc_id}")]
    UnknownDocId { seq: u64, doc_id: u64 },

    /// CRC failure on a log record that is not the final record of the file.
    #[error("checksum mismatch in change log near seq {seq}")]
    ChecksumMismatch { seq: u64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Size estimation had no usable probes.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// Simulation runs that may not be compared against each other.
    #[error("results not comparable: {0}")]
    Comparability(String),

    #[error("json error")]
    Json(#[from] serde_json::Error),
}

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty series")]
    EmptySeries,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("channel `{0}` has no present values in the segment")]
    AllMissing(String),
    #[error("channel `{channel}` has {present} present values, need at least {needed}")]
    TooFewValues {
        channel: String,
        present: usize,
        needed: usize,
    },
    #[error("range {start}..{end} has no present anchor on the {side} side")]
    MissingAnchor {
        start: usize,
        end: usize,
        side: &'static str,
    },
    #[error("slot {0} could not be imputed: no profile value, no anchors and no present values")]
    Unimputable(usize),
    #[error("masked range overlaps missing data at index {0}")]
    MaskOverlapsMissing(usize),
    #[error("series too short: need more than {needed} values, got {actual}")]
    TooShort { needed: usize, actual: usize },
    #[error("no usable rows after dropping undefined features")]
    NoRows,
    #[error("rows {0} and {1} are not consecutive hours")]
    NonContiguous(usize, usize),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("missing exogenous regressors for {0} forecast steps")]
    MissingExog(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("scaler mismatch: {0}")]
    ScalerMismatch(String),
    #[error("non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("duplicate model name `{0}`")]
    DuplicateName(String),
}

use thiserror::Error;

/// Errors raised by story handling, conversion and prompt construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("illegal transition: {0}")]
    IllegalTransition(String),

    #[error("unrecognized sentence: {0:?}")]
    UnrecognizedSentence(String),

    #[error("invalid story: {0}")]
    InvalidStory(String),

    #[error("invalid generator config: {0}")]
    Config(String),

    #[error("story {0} has no intent sentence")]
    NoIntent(String),

    #[error("{character} holds no belief about the {item}")]
    UnknownBelief { character: String, item: String },

    #[error("hint {0} already applied")]
    DuplicateHint(String),

    #[error("hint {0} cannot be applied to this instance")]
    HintUnavailable(String),

    #[error("missing gold label for {0}")]
    MissingGold(String),

    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),

    #[error("gold answer {0:?} has no matching option")]
    GoldNotRepresentable(String),

    #[error("too many answer options ({0}); at most 5 are supported")]
    TooManyOptions(usize),

    #[error("few-shot exemplar {0} overlaps the evaluation set")]
    ExemplarOverlap(String),

    #[error("malformed record: {0}")]
    Record(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

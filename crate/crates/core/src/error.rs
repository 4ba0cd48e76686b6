use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    EmptyCorpus,
    DegenerateVector,
    DimensionMismatch { expected: usize, found: usize },
    /// A token index does not fit the vocabulary the table was built for.
    IndexOutOfRange { index: usize, len: usize },
    NoEmbeddablePairs { concept: String },
    NoEmbeddedSeeds,
    MoreStagesThanEntities { stages: usize, entities: usize },
    UnknownStrategy(String),
    MissingInput(&'static str),
    TokenMismatch { position: usize, expected: String, found: String },
    InvalidParameter(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyCorpus => f.write_str("empty corpus"),
            Error::DegenerateVector => f.write_str("degenerate vector"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "token index {index} out of range for vocabulary of size {len}")
            }
            Error::NoEmbeddablePairs { concept } => {
                write!(f, "concept {concept} has no embeddable pairs")
            }
            Error::NoEmbeddedSeeds => f.write_str("no seed entity has an embedding"),
            Error::MoreStagesThanEntities { stages, entities } => {
                write!(f, "more stages than entities ({stages} > {entities})")
            }
            Error::UnknownStrategy(name) => write!(f, "unknown strategy: {name}"),
            Error::MissingInput(what) => write!(f, "missing input: {what}"),
            Error::TokenMismatch { position, expected, found } => write!(
                f,
                "tokenization mismatch at position {position}: expected {expected:?}, found {found:?}"
            ),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

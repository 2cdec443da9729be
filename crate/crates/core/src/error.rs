use thiserror::Error;

use crate::formats::Format;

/// Errors raised by the domain types and geometry routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChemError {
    #[error("unknown element symbol {0:?}")]
    UnknownElement(String),
    #[error("unknown residue code {0:?}")]
    UnknownResidue(String),
    #[error("residue {residue} cannot contain element {element}")]
    ResidueElementMismatch { residue: String, element: String },
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("structure has no atoms")]
    Empty,
    #[error("non-finite coordinate at atom {0}")]
    NonFinite(usize),
    #[error("point sets differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("residue {0} is not contiguous in the atom list")]
    NonContiguousResidue(i64),
    #[error("precision must be 1, 2, or 3 (got {0})")]
    InvalidPrecision(u8),
}

/// A parse failure in one of the text formats, carrying the 1-based line number.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{format} parse error at line {line}: {message}")]
pub struct ParseError {
    pub format: Format,
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(format: Format, line: usize, message: impl Into<String>) -> Self {
        ParseError {
            format,
            line,
            message: message.into(),
        }
    }
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Tokenize(#[from] crate::tokenizer::TokenizeError),
    #[error(transparent)]
    Decode(#[from] crate::tokenizer::DecodeError),
    #[error(transparent)]
    Model(#[from] crate::transformer::ModelError),
    #[error(transparent)]
    Train(#[from] crate::train::TrainError),
    #[error(transparent)]
    Sample(#[from] crate::sample::SampleError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error("{0}")]
    Invalid(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Whether the failure originates in the caller's inputs rather than in this crate.
    pub fn is_user_error(&self) -> bool {
        use crate::sample::SampleError;
        use crate::train::TrainError;
        fn model_user(e: &crate::transformer::ModelError) -> bool {
            use crate::transformer::ModelError as M;
            !matches!(e, M::NonFiniteGradient(_) | M::AllMasked | M::InvalidBatch(_))
        }
        match self {
            Error::Model(e) | Error::Sample(SampleError::Model(e)) | Error::Train(TrainError::Model(e)) => {
                model_user(e)
            }
            Error::Train(TrainError::NonFiniteLoss { .. }) => false,
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

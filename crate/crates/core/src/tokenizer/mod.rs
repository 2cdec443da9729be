//! Structure ⇄ token-sequence conversion.
//!
//! Two schemes are supported:
//!
//! * **character level** — the simplified file text, one token per
//!   character, except that element symbols (and residue-atom indicators)
//!   stay whole and newlines are written as `#`;
//! * **atom + coordinate level** — four tokens per atom (label, x, y, z),
//!   each coordinate a fixed-precision decimal string. Crystals are prefixed
//!   with the six lattice parameters, either as six whole tokens or spelled
//!   out character by character.
//!
//! Token ids are dense. Ids 0, 1, 2 are the padding, begin, and end markers;
//! content tokens follow in lexicographic order.

mod codec;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use codec::{decode, encode, round_coords};
pub use vocab::{build_vocab, Vocabulary, BOS, EOS, PAD};

use crate::decimal::Precision;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Char,
    AtomCoord,
}

/// How crystal lattice parameters are tokenized under the atom + coordinate scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeMode {
    Char,
    WholeToken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scheme {
    pub kind: SchemeKind,
    pub precision: Precision,
    pub lattice_mode: LatticeMode,
}

impl Scheme {
    pub fn new(kind: SchemeKind, precision: Precision) -> Self {
        Scheme {
            kind,
            precision,
            lattice_mode: LatticeMode::WholeToken,
        }
    }

    pub fn with_lattice_mode(mut self, mode: LatticeMode) -> Self {
        self.lattice_mode = mode;
        self
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Char => "char",
            SchemeKind::AtomCoord => "atom_coord",
        })
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "char" | "lm-ch" => Ok(SchemeKind::Char),
            "atom_coord" | "lm-ac" => Ok(SchemeKind::AtomCoord),
            _ => Err(format!("unknown scheme {s:?} (expected char or atom_coord)")),
        }
    }
}

impl fmt::Display for LatticeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LatticeMode::Char => "char",
            LatticeMode::WholeToken => "whole_token",
        })
    }
}

impl FromStr for LatticeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "char" => Ok(LatticeMode::Char),
            "whole_token" | "whole" => Ok(LatticeMode::WholeToken),
            _ => Err(format!("unknown lattice mode {s:?} (expected char or whole_token)")),
        }
    }
}

/// Token ids for one structure, starting with BOS and ending with EOS.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenizeError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("corpus mixes structure kinds")]
    MixedKinds,
    #[error("token {0:?} is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("vocabulary is built for {expected:?} structures, got {found:?}")]
    KindMismatch {
        expected: crate::structure::StructureKind,
        found: crate::structure::StructureKind,
    },
    #[error("vocabulary file line {line}: {message}")]
    BadVocabFile { line: usize, message: String },
}

/// First grammar violation found while decoding. Positions index the full
/// id sequence (BOS is position 0).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("sequence does not start with BOS")]
    MissingBos,
    #[error("sequence ends at position {position} without EOS")]
    MissingEos { position: usize },
    #[error("token id {id} at position {position} is outside the vocabulary")]
    IdOutOfRange { position: usize, id: u32 },
    #[error("special token at position {position} inside the content")]
    UnexpectedSpecial { position: usize },
    #[error("no atoms between BOS and EOS")]
    Empty,
    #[error("truncated atom group starting at position {position}")]
    TruncatedGroup { position: usize },
    #[error("coordinate token where an atom token was expected at position {position}")]
    CoordinateWhereAtomExpected { position: usize },
    #[error("expected a coordinate token at position {position}")]
    AtomWhereCoordinateExpected { position: usize },
    #[error("malformed lattice parameter at position {position}")]
    MalformedLattice { position: usize },
    #[error("malformed character stream at position {position}: {reason}")]
    MalformedStream { position: usize, reason: String },
    #[error("unknown residue indicator {token:?} at position {position}")]
    UnknownResidueIndicator { position: usize, token: String },
    #[error("decoded structure is invalid: {0}")]
    InvalidStructure(String),
}

impl DecodeError {
    /// Stable short label used in failure logs.
    pub fn label(&self) -> &'static str {
        match self {
            DecodeError::MissingBos => "missing_bos",
            DecodeError::MissingEos { .. } => "missing_eos",
            DecodeError::IdOutOfRange { .. } => "id_out_of_range",
            DecodeError::UnexpectedSpecial { .. } => "unexpected_special",
            DecodeError::Empty => "empty",
            DecodeError::TruncatedGroup { .. } => "truncated_group",
            DecodeError::CoordinateWhereAtomExpected { .. } => "coordinate_where_atom_expected",
            DecodeError::AtomWhereCoordinateExpected { .. } => "atom_where_coordinate_expected",
            DecodeError::MalformedLattice { .. } => "malformed_lattice",
            DecodeError::MalformedStream { .. } => "malformed_stream",
            DecodeError::UnknownResidueIndicator { .. } => "unknown_residue_indicator",
            DecodeError::InvalidStructure(_) => "invalid_structure",
        }
    }
}

//! Readers and writers for restricted XYZ, CIF, and PDB grammars.
//!
//! Each writer emits exactly the grammar its reader accepts, with every
//! number printed at a fixed decimal precision, so `parse(write(s, p))`
//! reproduces `s` rounded to `p` places.

mod cif;
mod pdb;
mod prune;
mod xyz;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use cif::{parse_cif_subset, write_cif_subset};
pub use pdb::{parse_pdb_subset, write_pdb_subset};
pub use prune::{prune_pocket, PruneOutcome, PruneWarning, TargetRange};
pub use xyz::{parse_xyz, write_xyz};

use crate::decimal::Precision;
use crate::error::{Error, ParseError};
use crate::structure::{Structure, StructureKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Xyz,
    Cif,
    Pdb,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Xyz => "xyz",
            Format::Cif => "cif",
            Format::Pdb => "pdb",
        }
    }

    pub fn from_extension(ext: &str) -> Option<Format> {
        match ext.to_ascii_lowercase().as_str() {
            "xyz" => Some(Format::Xyz),
            "cif" => Some(Format::Cif),
            "pdb" => Some(Format::Pdb),
            _ => None,
        }
    }

    pub fn structure_kind(self) -> StructureKind {
        match self {
            Format::Xyz => StructureKind::Molecule,
            Format::Cif => StructureKind::Crystal,
            Format::Pdb => StructureKind::Pocket,
        }
    }

    pub fn for_kind(kind: StructureKind) -> Format {
        match kind {
            StructureKind::Molecule => Format::Xyz,
            StructureKind::Crystal => Format::Cif,
            StructureKind::Pocket => Format::Pdb,
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Xyz => "XYZ",
            Format::Cif => "CIF",
            Format::Pdb => "PDB",
        })
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Format::from_extension(s).ok_or_else(|| format!("unknown format {s:?}"))
    }
}

/// Raw text of one structure file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileDocument {
    pub format: Format,
    pub text: String,
    pub source_path: Option<String>,
}

impl FileDocument {
    pub fn new(format: Format, text: impl Into<String>) -> Self {
        FileDocument {
            format,
            text: text.into(),
            source_path: None,
        }
    }

    /// Reads a file, inferring the format from its extension.
    pub fn read(path: &Path) -> Result<Self, Error> {
        let format = path
            .extension()
            .and_then(|e| e.to_str())
            .and_then(Format::from_extension)
            .ok_or_else(|| Error::Invalid(format!("{}: unrecognized extension", path.display())))?;
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(FileDocument {
            format,
            text,
            source_path: Some(path.display().to_string()),
        })
    }

    fn expect_format(&self, format: Format) -> Result<(), ParseError> {
        if self.format != format {
            return Err(ParseError::new(
                format,
                0,
                format!("document is tagged {}, not {format}", self.format),
            ));
        }
        Ok(())
    }
}

/// Parses any supported document into a [`Structure`].
pub fn parse(doc: &FileDocument) -> Result<Structure, ParseError> {
    Ok(match doc.format {
        Format::Xyz => parse_xyz(doc)?.into(),
        Format::Cif => parse_cif_subset(doc)?.into(),
        Format::Pdb => parse_pdb_subset(doc)?.into(),
    })
}

/// Writes a structure in the format that matches its kind.
pub fn write(s: &Structure, precision: Precision) -> FileDocument {
    match s {
        Structure::Molecule(m) => write_xyz(m, precision),
        Structure::Crystal(c) => write_cif_subset(c, precision),
        Structure::Pocket(p) => write_pdb_subset(p, precision),
    }
}

/// Splits a line into whitespace-separated fields.
pub(crate) fn fields(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

pub(crate) fn parse_number(
    format: Format,
    line: usize,
    token: &str,
    what: &str,
) -> Result<f64, ParseError> {
    let v: f64 = token
        .parse()
        .map_err(|_| ParseError::new(format, line, format!("cannot parse {what} {token:?}")))?;
    if !v.is_finite() {
        return Err(ParseError::new(format, line, format!("non-finite {what} {token:?}")));
    }
    Ok(if v == 0.0 { 0.0 } else { v })
}

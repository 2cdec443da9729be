//! Canonical amino-acid residues and their heavy-atom compositions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::element::Element;
use crate::error::ChemError;

const RESIDUES_TXT: &str = include_str!("../data/residues.txt");

pub const CANONICAL_CODES: [&str; 20] = [
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
    "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
];

static COMPOSITIONS: LazyLock<Vec<BTreeMap<Element, usize>>> = LazyLock::new(|| {
    let mut out = vec![BTreeMap::new(); CANONICAL_CODES.len()];
    for line in RESIDUES_TXT.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let code = fields.next().unwrap();
        let idx = CANONICAL_CODES
            .iter()
            .position(|c| *c == code)
            .expect("residue table code");
        for f in fields {
            let (sym, n) = f.split_once(':').expect("element:count");
            out[idx].insert(Element::from_symbol(sym).unwrap(), n.parse().unwrap());
        }
    }
    out
});

/// One of the 20 canonical amino acids.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Residue(u8);

impl Residue {
    pub fn from_code(code: &str) -> Result<Self, ChemError> {
        CANONICAL_CODES
            .iter()
            .position(|c| *c == code)
            .map(|i| Residue(i as u8))
            .ok_or_else(|| ChemError::UnknownResidue(code.to_string()))
    }

    pub fn code(self) -> &'static str {
        CANONICAL_CODES[self.0 as usize]
    }

    pub fn all() -> impl Iterator<Item = Residue> {
        (0..CANONICAL_CODES.len()).map(|i| Residue(i as u8))
    }

    /// Heavy-atom element multiset (backbone plus side chain).
    pub fn composition(self) -> &'static BTreeMap<Element, usize> {
        &COMPOSITIONS[self.0 as usize]
    }

    pub fn heavy_atom_count(self) -> usize {
        self.composition().values().sum()
    }

    pub fn admits(self, element: Element) -> bool {
        self.composition().contains_key(&element)
    }
}

impl fmt::Debug for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for Residue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Residue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Residue::from_code(&s).map_err(serde::de::Error::custom)
    }
}

/// Parse a combined residue-atom indicator such as `"CYS-S"`.
pub fn parse_indicator(token: &str) -> Result<(Residue, Element), ChemError> {
    let (code, sym) = token
        .split_once('-')
        .ok_or_else(|| ChemError::UnknownResidue(token.to_string()))?;
    let residue = Residue::from_code(code)?;
    let element = Element::from_symbol(sym)?;
    if !residue.admits(element) {
        return Err(ChemError::ResidueElementMismatch {
            residue: code.to_string(),
            element: sym.to_string(),
        });
    }
    Ok((residue, element))
}

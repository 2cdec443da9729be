//! Bundled periodic table.
//!
//! The table covers the 89 elements that appear in common inorganic crystal
//! corpora (Z = 1..94 without He, At, Rn, Fr, Ra). Masses are standard atomic
//! weights in amu; covalent radii are single-bond radii in Å.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ChemError;

const ELEMENTS_CSV: &str = include_str!("../data/elements.csv");

#[derive(Debug, Clone)]
pub struct ElementData {
    pub symbol: &'static str,
    pub atomic_number: u8,
    pub mass: f64,
    pub covalent_radius: f64,
}

static TABLE: LazyLock<Vec<ElementData>> = LazyLock::new(|| {
    ELEMENTS_CSV
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|line| {
            let f: Vec<&'static str> = line.split(',').collect();
            ElementData {
                symbol: f[1],
                atomic_number: f[0].parse().expect("atomic number"),
                mass: f[2].parse().expect("mass"),
                covalent_radius: f[3].parse().expect("radius"),
            }
        })
        .collect()
});

/// A chemical element, stored as an index into the bundled table.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(u8);

impl Element {
    pub fn from_symbol(symbol: &str) -> Result<Self, ChemError> {
        TABLE
            .iter()
            .position(|e| e.symbol == symbol)
            .map(|i| Element(i as u8))
            .ok_or_else(|| ChemError::UnknownElement(symbol.to_string()))
    }

    pub fn from_atomic_number(z: u8) -> Result<Self, ChemError> {
        TABLE
            .iter()
            .position(|e| e.atomic_number == z)
            .map(|i| Element(i as u8))
            .ok_or_else(|| ChemError::UnknownElement(format!("Z={z}")))
    }

    fn data(self) -> &'static ElementData {
        &TABLE[self.0 as usize]
    }

    pub fn symbol(self) -> &'static str {
        self.data().symbol
    }

    pub fn atomic_number(self) -> u8 {
        self.data().atomic_number
    }

    pub fn mass(self) -> f64 {
        self.data().mass
    }

    pub fn covalent_radius(self) -> f64 {
        self.data().covalent_radius
    }

    /// All elements in table order (ascending atomic number).
    pub fn all() -> impl Iterator<Item = Element> {
        (0..TABLE.len()).map(|i| Element(i as u8))
    }

    pub fn count() -> usize {
        TABLE.len()
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Element {
    type Err = ChemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Element::from_symbol(s)
    }
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Element::from_symbol(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_89_entries() {
        assert_eq!(Element::count(), 89);
        for e in Element::all() {
            assert!(e.mass() > 0.0);
            assert!(e.covalent_radius() > 0.0);
        }
    }

    #[test]
    fn lookup() {
        let c = Element::from_symbol("C").unwrap();
        assert_eq!(c.atomic_number(), 6);
        assert_eq!(c.mass(), 12.011);
        assert_eq!(Element::from_atomic_number(84).unwrap().symbol(), "Po");
        assert!(Element::from_symbol("He").is_err());
        assert!(Element::from_symbol("c").is_err());
    }
}

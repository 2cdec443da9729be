//! Molecules, crystals, and protein pockets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::error::ChemError;
use crate::residue::Residue;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub position: Vec3,
}

/// A point cloud of atoms with Cartesian coordinates in Å.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
}

impl Molecule {
    pub fn new(atoms: Vec<Atom>) -> Result<Self, ChemError> {
        if atoms.is_empty() {
            return Err(ChemError::Empty);
        }
        check_finite(atoms.iter().map(|a| a.position))?;
        Ok(Molecule { atoms })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Unit-cell parameters: edge lengths in Å, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Lattice {
    pub fn new(a: f64, b: f64, c: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self, ChemError> {
        let lat = Lattice {
            a,
            b,
            c,
            alpha,
            beta,
            gamma,
        };
        lat.validate()?;
        Ok(lat)
    }

    pub fn cubic(a: f64) -> Result<Self, ChemError> {
        Lattice::new(a, a, a, 90.0, 90.0, 90.0)
    }

    pub fn params(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.alpha, self.beta, self.gamma]
    }

    pub fn validate(&self) -> Result<(), ChemError> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ChemError::InvalidLattice(format!("length {name} = {v}")));
            }
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0 && v < 180.0) {
                return Err(ChemError::InvalidLattice(format!("angle {name} = {v}")));
            }
        }
        if volume_radicand(self) <= RADICAND_EPS {
            return Err(ChemError::InvalidLattice(
                "angle triple does not describe a cell".into(),
            ));
        }
        Ok(())
    }
}

/// Cells flatter than this are treated as degenerate.
pub(crate) const RADICAND_EPS: f64 = 1e-12;

pub(crate) fn volume_radicand(lat: &Lattice) -> f64 {
    let (ca, cb, cg) = (
        lat.alpha.to_radians().cos(),
        lat.beta.to_radians().cos(),
        lat.gamma.to_radians().cos(),
    );
    1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub element: Element,
    pub frac: Vec3,
}

/// A periodic crystal: lattice plus sites in fractional coordinates within [0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crystal {
    pub lattice: Lattice,
    pub sites: Vec<Site>,
}

impl Crystal {
    /// Builds a crystal, wrapping every fractional coordinate into [0, 1).
    pub fn new(lattice: Lattice, sites: Vec<Site>) -> Result<Self, ChemError> {
        lattice.validate()?;
        if sites.is_empty() {
            return Err(ChemError::Empty);
        }
        check_finite(sites.iter().map(|s| s.frac))?;
        let sites = sites
            .into_iter()
            .map(|s| Site {
                element: s.element,
                frac: s.frac.map(wrap_fraction),
            })
            .collect();
        Ok(Crystal { lattice, sites })
    }

    pub fn composition(&self) -> BTreeMap<Element, usize> {
        let mut out = BTreeMap::new();
        for s in &self.sites {
            *out.entry(s.element).or_insert(0) += 1;
        }
        out
    }
}

/// Wraps a fractional coordinate into [0, 1), never producing -0.0 or 1.0.
pub fn wrap_fraction(f: f64) -> f64 {
    let w = f - f.floor();
    if w >= 1.0 || w == 0.0 {
        0.0
    } else {
        w
    }
}

/// Rounds a fractional coordinate to `places` decimals, then wraps into [0, 1).
pub fn round_fraction(f: f64, places: usize) -> f64 {
    wrap_fraction(crate::decimal::round_half_away(f, places))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResidueAtom {
    pub residue: Residue,
    pub element: Element,
    pub residue_index: i64,
}

impl ResidueAtom {
    /// Combined residue-element label, e.g. `CYS-S`.
    pub fn indicator(&self) -> String {
        format!("{}-{}", self.residue.code(), self.element.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PocketAtom {
    pub label: ResidueAtom,
    pub position: Vec3,
}

/// A protein binding site: heavy atoms grouped into contiguous residues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pocket {
    pub atoms: Vec<PocketAtom>,
}

impl Pocket {
    pub fn new(atoms: Vec<PocketAtom>) -> Result<Self, ChemError> {
        if atoms.is_empty() {
            return Err(ChemError::Empty);
        }
        check_finite(atoms.iter().map(|a| a.position))?;
        let mut seen = std::collections::HashSet::new();
        let mut prev = None;
        for a in &atoms {
            let idx = a.label.residue_index;
            if prev != Some(idx) {
                if !seen.insert(idx) {
                    return Err(ChemError::NonContiguousResidue(idx));
                }
                prev = Some(idx);
            }
            if !a.label.residue.admits(a.label.element) {
                return Err(ChemError::ResidueElementMismatch {
                    residue: a.label.residue.code().into(),
                    element: a.label.element.symbol().into(),
                });
            }
        }
        Ok(Pocket { atoms })
    }

    /// Atom index ranges of each residue, in order.
    pub fn residue_spans(&self) -> Vec<std::ops::Range<usize>> {
        let mut spans = Vec::new();
        let mut start = 0;
        for i in 1..=self.atoms.len() {
            if i == self.atoms.len()
                || self.atoms[i].label.residue_index != self.atoms[start].label.residue_index
            {
                spans.push(start..i);
                start = i;
            }
        }
        spans
    }

    /// Residue sequence as a dash-joined string (`ARG-SER-ASP`).
    pub fn residue_ordering(&self) -> String {
        self.residue_spans()
            .iter()
            .map(|s| self.atoms[s.start].label.residue.code())
            .collect::<Vec<_>>()
            .join("-")
    }

    /// Same pocket with residues renumbered 1..=R in order of appearance.
    pub fn renumbered(&self) -> Pocket {
        let mut atoms = self.atoms.clone();
        for (k, span) in self.residue_spans().into_iter().enumerate() {
            for a in &mut atoms[span] {
                a.label.residue_index = k as i64 + 1;
            }
        }
        Pocket { atoms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Molecule,
    Crystal,
    Pocket,
}

/// Any of the three structure families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Structure {
    Molecule(Molecule),
    Crystal(Crystal),
    Pocket(Pocket),
}

impl Structure {
    pub fn kind(&self) -> StructureKind {
        match self {
            Structure::Molecule(_) => StructureKind::Molecule,
            Structure::Crystal(_) => StructureKind::Crystal,
            Structure::Pocket(_) => StructureKind::Pocket,
        }
    }

    pub fn atom_count(&self) -> usize {
        match self {
            Structure::Molecule(m) => m.atoms.len(),
            Structure::Crystal(c) => c.sites.len(),
            Structure::Pocket(p) => p.atoms.len(),
        }
    }

    pub fn elements(&self) -> Vec<Element> {
        match self {
            Structure::Molecule(m) => m.atoms.iter().map(|a| a.element).collect(),
            Structure::Crystal(c) => c.sites.iter().map(|s| s.element).collect(),
            Structure::Pocket(p) => p.atoms.iter().map(|a| a.label.element).collect(),
        }
    }

    pub fn as_molecule(&self) -> Option<&Molecule> {
        match self {
            Structure::Molecule(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_crystal(&self) -> Option<&Crystal> {
        match self {
            Structure::Crystal(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_pocket(&self) -> Option<&Pocket> {
        match self {
            Structure::Pocket(p) => Some(p),
            _ => None,
        }
    }
}

impl From<Molecule> for Structure {
    fn from(m: Molecule) -> Self {
        Structure::Molecule(m)
    }
}

impl From<Crystal> for Structure {
    fn from(c: Crystal) -> Self {
        Structure::Crystal(c)
    }
}

impl From<Pocket> for Structure {
    fn from(p: Pocket) -> Self {
        Structure::Pocket(p)
    }
}

fn check_finite(points: impl Iterator<Item = Vec3>) -> Result<(), ChemError> {
    for (i, p) in points.enumerate() {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(ChemError::NonFinite(i));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(s: &str) -> Element {
        Element::from_symbol(s).unwrap()
    }

    #[test]
    fn wrap_into_unit_interval() {
        assert_eq!(wrap_fraction(1.25), 0.25);
        assert_eq!(wrap_fraction(-0.25), 0.75);
        assert_eq!(wrap_fraction(1.0), 0.0);
        assert_eq!(wrap_fraction(-1e-17), 0.0);
        assert!(wrap_fraction(-0.0).is_sign_positive());
    }

    #[test]
    fn lattice_rejects_impossible_angles() {
        assert!(Lattice::new(1.0, 1.0, 1.0, 120.0, 120.0, 120.0).is_err());
        assert!(Lattice::new(1.0, 1.0, 1.0, 90.0, 90.0, 180.0).is_err());
        assert!(Lattice::new(0.0, 1.0, 1.0, 90.0, 90.0, 90.0).is_err());
        assert!(Lattice::new(1.0, 1.0, 1.0, 60.0, 60.0, 60.0).is_ok());
    }

    #[test]
    fn pocket_contiguity() {
        let gly = Residue::from_code("GLY").unwrap();
        let atom = |idx, e: &str| PocketAtom {
            label: ResidueAtom {
                residue: gly,
                element: el(e),
                residue_index: idx,
            },
            position: [0.0; 3],
        };
        assert!(Pocket::new(vec![atom(1, "N"), atom(1, "C"), atom(2, "N")]).is_ok());
        assert_eq!(
            Pocket::new(vec![atom(1, "N"), atom(2, "N"), atom(1, "C")]),
            Err(ChemError::NonContiguousResidue(1))
        );
        let p = Pocket::new(vec![atom(7, "N"), atom(7, "C"), atom(9, "N")]).unwrap();
        assert_eq!(p.residue_spans(), vec![0..2, 2..3]);
        assert_eq!(p.residue_ordering(), "GLY-GLY");
        assert_eq!(p.renumbered().atoms[2].label.residue_index, 2);
    }
}

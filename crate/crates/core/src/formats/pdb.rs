use std::fmt::Write as _;

use super::{fields, parse_number, FileDocument, Format};
use crate::decimal::{format_fixed, Precision};
use crate::element::Element;
use crate::error::{ChemError, ParseError};
use crate::residue::Residue;
use crate::structure::{Pocket, PocketAtom, ResidueAtom};

/// Reads whitespace-separated `ATOM serial element residue resindex x y z`
/// records terminated by `END`. Hydrogens and non-canonical residues are
/// rejected, as is a residue whose atoms are not contiguous.
pub fn parse_pdb_subset(doc: &FileDocument) -> Result<Pocket, ParseError> {
    doc.expect_format(Format::Pdb)?;
    let err = |line: usize, msg: String| ParseError::new(Format::Pdb, line, msg);
    let mut atoms = Vec::new();
    let mut ended = false;
    for (i, line) in doc.text.lines().enumerate() {
        let lineno = i + 1;
        let f = fields(line);
        if f.is_empty() {
            continue;
        }
        if ended {
            return Err(err(lineno, "content after END".into()));
        }
        match f[0] {
            "END" if f.len() == 1 => {
                ended = true;
                continue;
            }
            "ATOM" => {}
            other => return Err(err(lineno, format!("unsupported record {other:?}"))),
        }
        if f.len() != 8 {
            return Err(err(lineno, format!("malformed ATOM record: expected 8 fields, found {}", f.len())));
        }
        f[1].parse::<u64>()
            .map_err(|_| err(lineno, format!("serial {:?} is not an integer", f[1])))?;
        let element = Element::from_symbol(f[2]).map_err(|e| err(lineno, e.to_string()))?;
        if element.symbol() == "H" {
            return Err(err(lineno, "hydrogen atoms are not part of the heavy-atom subset".into()));
        }
        let residue = Residue::from_code(f[3]).map_err(|e| err(lineno, e.to_string()))?;
        if !residue.admits(element) {
            return Err(err(lineno, format!("residue {residue} cannot contain element {element}")));
        }
        let residue_index: i64 = f[4]
            .parse()
            .map_err(|_| err(lineno, format!("residue index {:?} is not an integer", f[4])))?;
        let mut position = [0.0; 3];
        for d in 0..3 {
            position[d] = parse_number(Format::Pdb, lineno, f[d + 5], "coordinate")?;
        }
        atoms.push((
            lineno,
            PocketAtom {
                label: ResidueAtom {
                    residue,
                    element,
                    residue_index,
                },
                position,
            },
        ));
    }
    if !ended {
        return Err(err(doc.text.lines().count() + 1, "missing END record".into()));
    }
    // residue code must be constant within a residue index
    for w in atoms.windows(2) {
        let (a, b) = (&w[0].1.label, &w[1].1.label);
        if a.residue_index == b.residue_index && a.residue != b.residue {
            return Err(err(w[1].0, format!("residue {} changes code mid-residue", b.residue_index)));
        }
    }
    let line_of = |idx: i64| {
        atoms
            .iter()
            .filter(|(_, a)| a.label.residue_index == idx)
            .nth(1)
            .map_or(0, |(l, _)| *l)
    };
    let pocket_atoms: Vec<PocketAtom> = atoms.iter().map(|(_, a)| *a).collect();
    Pocket::new(pocket_atoms).map_err(|e| match e {
        ChemError::NonContiguousResidue(idx) => err(
            line_of(idx),
            format!("residue {idx} is interleaved with another residue"),
        ),
        ChemError::Empty => err(1, "no ATOM records".into()),
        other => err(0, other.to_string()),
    })
}

pub fn write_pdb_subset(p: &Pocket, precision: Precision) -> FileDocument {
    let places = precision.places();
    let mut text = String::new();
    for (serial, a) in p.atoms.iter().enumerate() {
        let [x, y, z] = a.position;
        let _ = writeln!(
            text,
            "ATOM {} {} {} {} {} {} {}",
            serial + 1,
            a.label.element,
            a.label.residue,
            a.label.residue_index,
            format_fixed(x, places),
            format_fixed(y, places),
            format_fixed(z, places)
        );
    }
    text.push_str("END\n");
    FileDocument::new(Format::Pdb, text)
}

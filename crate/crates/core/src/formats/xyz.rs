use std::fmt::Write as _;

use super::{fields, parse_number, FileDocument, Format};
use crate::decimal::{format_fixed, Precision};
use crate::element::Element;
use crate::error::ParseError;
use crate::structure::{Atom, Molecule};

/// Reads `N`, a comment line, then `N` lines of `Symbol x y z`.
pub fn parse_xyz(doc: &FileDocument) -> Result<Molecule, ParseError> {
    doc.expect_format(Format::Xyz)?;
    let err = |line: usize, msg: String| ParseError::new(Format::Xyz, line, msg);
    let lines: Vec<&str> = doc.text.lines().collect();
    let first = lines.first().ok_or_else(|| err(1, "empty document".into()))?;
    let count: usize = first
        .trim()
        .parse()
        .map_err(|_| err(1, format!("atom count {:?} is not an integer", first.trim())))?;
    if count == 0 {
        return Err(err(1, "atom count must be at least 1".into()));
    }
    if lines.len() < 2 {
        return Err(err(2, "missing comment line".into()));
    }
    let mut atoms = Vec::with_capacity(count);
    for k in 0..count {
        let lineno = k + 3;
        let line = lines.get(k + 2).filter(|l| !l.trim().is_empty()).ok_or_else(|| {
            err(
                lineno,
                format!("atom count mismatch: header says {count}, found {k}"),
            )
        })?;
        let f = fields(line);
        if f.len() != 4 {
            return Err(err(lineno, format!("expected 4 fields, found {}", f.len())));
        }
        let element =
            Element::from_symbol(f[0]).map_err(|e| err(lineno, e.to_string()))?;
        let mut position = [0.0; 3];
        for d in 0..3 {
            position[d] = parse_number(Format::Xyz, lineno, f[d + 1], "coordinate")?;
        }
        atoms.push(Atom { element, position });
    }
    if let Some((extra, _)) = lines
        .iter()
        .enumerate()
        .skip(count + 2)
        .find(|(_, l)| !l.trim().is_empty())
    {
        return Err(err(
            extra + 1,
            format!("atom count mismatch: more than {count} atom lines"),
        ));
    }
    Molecule::new(atoms).map_err(|e| err(1, e.to_string()))
}

/// Writes the molecule with an empty comment line and fixed-precision coordinates.
pub fn write_xyz(m: &Molecule, precision: Precision) -> FileDocument {
    let p = precision.places();
    let mut text = format!("{}\n\n", m.atoms.len());
    for a in &m.atoms {
        let [x, y, z] = a.position;
        let _ = writeln!(
            text,
            "{} {} {} {}",
            a.element,
            format_fixed(x, p),
            format_fixed(y, p),
            format_fixed(z, p)
        );
    }
    FileDocument::new(Format::Xyz, text)
}

use std::fmt::Write as _;

use super::{fields, parse_number, FileDocument, Format};
use crate::decimal::{format_fixed, Precision};
use crate::element::Element;
use crate::error::ParseError;
use crate::structure::{round_fraction, Crystal, Lattice, Site};

const CELL_KEYS: [&str; 6] = [
    "_cell_length_a",
    "_cell_length_b",
    "_cell_length_c",
    "_cell_angle_alpha",
    "_cell_angle_beta",
    "_cell_angle_gamma",
];

const SITE_TAGS: [&str; 4] = [
    "_atom_site_type_symbol",
    "_atom_site_fract_x",
    "_atom_site_fract_y",
    "_atom_site_fract_z",
];

const DATA_BLOCK: &str = "data_chemlm";

/// Reads the restricted CIF grammar: optional `data_` header, the six cell
/// parameters in fixed order, one `loop_` with the four site tags, then one
/// row per site. Blank lines are ignored; any other key is rejected.
pub fn parse_cif_subset(doc: &FileDocument) -> Result<Crystal, ParseError> {
    doc.expect_format(Format::Cif)?;
    let err = |line: usize, msg: String| ParseError::new(Format::Cif, line, msg);
    let mut lines = doc
        .text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    if let Some((_, l)) = lines.peek() {
        if l.starts_with("data_") {
            lines.next();
        }
    }

    let mut cell = [0.0; 6];
    for (k, key) in CELL_KEYS.iter().enumerate() {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| err(0, format!("missing cell key {key}")))?;
        let f = fields(line);
        if f.first() != Some(key) {
            return Err(err(lineno, format!("expected {key}, found {:?}", f.first().unwrap_or(&""))));
        }
        if f.len() != 2 {
            return Err(err(lineno, format!("{key} takes exactly one value")));
        }
        cell[k] = parse_number(Format::Cif, lineno, f[1], key)?;
    }
    let lattice = Lattice::new(cell[0], cell[1], cell[2], cell[3], cell[4], cell[5])
        .map_err(|e| err(0, e.to_string()))?;

    match lines.next() {
        Some((_, "loop_")) => {}
        Some((n, l)) => return Err(err(n, format!("expected loop_, found {l:?}"))),
        None => return Err(err(0, "missing site loop".into())),
    }
    for tag in SITE_TAGS {
        match lines.next() {
            Some((_, l)) if l == tag => {}
            Some((n, l)) => return Err(err(n, format!("expected {tag}, found {l:?}"))),
            None => return Err(err(0, format!("missing loop tag {tag}"))),
        }
    }

    let mut sites = Vec::new();
    for (lineno, line) in lines {
        if line.starts_with('_') || line.starts_with("loop_") {
            return Err(err(lineno, format!("unsupported CIF item {line:?}")));
        }
        let f = fields(line);
        if f.len() != 4 {
            return Err(err(lineno, format!("malformed loop row: expected 4 fields, found {}", f.len())));
        }
        let element = Element::from_symbol(f[0]).map_err(|e| err(lineno, e.to_string()))?;
        let mut frac = [0.0; 3];
        for d in 0..3 {
            frac[d] = parse_number(Format::Cif, lineno, f[d + 1], "fractional coordinate")?;
        }
        sites.push(Site { element, frac });
    }
    if sites.is_empty() {
        return Err(err(0, "site loop has no rows".into()));
    }
    Crystal::new(lattice, sites).map_err(|e| err(0, e.to_string()))
}

pub fn write_cif_subset(c: &Crystal, precision: Precision) -> FileDocument {
    let p = precision.places();
    let mut text = format!("{DATA_BLOCK}\n");
    for (key, v) in CELL_KEYS.iter().zip(c.lattice.params()) {
        let _ = writeln!(text, "{key} {}", format_fixed(v, p));
    }
    text.push_str("loop_\n");
    for tag in SITE_TAGS {
        text.push_str(tag);
        text.push('\n');
    }
    for s in &c.sites {
        let [x, y, z] = s.frac.map(|f| round_fraction(f, p));
        let _ = writeln!(
            text,
            "{} {} {} {}",
            s.element,
            format_fixed(x, p),
            format_fixed(y, p),
            format_fixed(z, p)
        );
    }
    FileDocument::new(Format::Cif, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PO: &str = "data_po\n_cell_length_a 4.0\n_cell_length_b 4.0\n_cell_length_c 4.0\n\
_cell_angle_alpha 90\n_cell_angle_beta 90\n_cell_angle_gamma 90\nloop_\n\
_atom_site_type_symbol\n_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\nPo 0 0 0\n";

    #[test]
    fn minimal_cubic() {
        let c = parse_cif_subset(&FileDocument::new(Format::Cif, PO)).unwrap();
        assert_eq!(c.lattice, Lattice::cubic(4.0).unwrap());
        assert_eq!(c.sites.len(), 1);
        assert_eq!(c.sites[0].element.symbol(), "Po");
        assert_eq!(c.sites[0].frac, [0.0; 3]);
    }

    #[test]
    fn perovskite_has_five_sites() {
        let text = "_cell_length_a 3.905\n_cell_length_b 3.905\n_cell_length_c 3.905\n\
_cell_angle_alpha 90.000\n_cell_angle_beta 90.000\n_cell_angle_gamma 90.000\nloop_\n\
_atom_site_type_symbol\n_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\n\
Sr 0.000 0.000 0.000\nTi 0.500 0.500 0.500\nO 0.500 0.500 0.000\nO 0.500 0.000 0.500\nO 0.000 0.500 0.500\n";
        let c = parse_cif_subset(&FileDocument::new(Format::Cif, text)).unwrap();
        assert_eq!(c.sites.len(), 5);
        assert_eq!(c.sites[4].element.symbol(), "O");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let missing = PO.replace("_cell_length_b 4.0\n", "");
        let e = parse_cif_subset(&FileDocument::new(Format::Cif, missing)).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("_cell_length_b"));

        let bad_row = PO.replace("Po 0 0 0", "Po 0 0");
        let e = parse_cif_subset(&FileDocument::new(Format::Cif, bad_row)).unwrap_err();
        assert_eq!(e.line, 13);

        let occupancy = PO.replace(
            "_atom_site_fract_z\n",
            "_atom_site_fract_z\n_atom_site_occupancy\n",
        );
        assert!(parse_cif_subset(&FileDocument::new(Format::Cif, occupancy)).is_err());
    }

    #[test]
    fn writer_wraps_and_rounds() {
        let o = Element::from_symbol("O").unwrap();
        let c = Crystal::new(
            Lattice::cubic(4.0).unwrap(),
            vec![Site { element: o, frac: [0.9996, 0.25, 0.5] }],
        )
        .unwrap();
        let doc = write_cif_subset(&c, Precision::new(3).unwrap());
        assert!(doc.text.ends_with("O 0.000 0.250 0.500\n"));
        let back = parse_cif_subset(&doc).unwrap();
        assert_eq!(back.sites[0].frac, [0.0, 0.25, 0.5]);
    }
}

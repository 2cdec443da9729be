use super::vocab::CHAR_BASE;
use super::{
    DecodeError, LatticeMode, Scheme, SchemeKind, TokenSequence, TokenizeError, Vocabulary, BOS,
    EOS,
};
use crate::decimal::{format_fixed, parse_fixed, round_half_away, Precision};
use crate::element::Element;
use crate::residue::{parse_indicator, Residue};
use crate::structure::{
    round_fraction, Atom, Crystal, Lattice, Molecule, Pocket, PocketAtom, ResidueAtom, Site,
    Structure, StructureKind,
};

/// Rounds every coordinate and lattice parameter half away from zero.
/// Crystal fractional coordinates are re-wrapped into [0, 1) afterwards.
pub fn round_coords(s: &Structure, precision: Precision) -> Structure {
    let p = precision.places();
    let r = |v: f64| round_half_away(v, p);
    match s {
        Structure::Molecule(m) => Structure::Molecule(Molecule {
            atoms: m
                .atoms
                .iter()
                .map(|a| Atom {
                    element: a.element,
                    position: a.position.map(r),
                })
                .collect(),
        }),
        Structure::Crystal(c) => {
            let l = &c.lattice;
            Structure::Crystal(Crystal {
                lattice: Lattice {
                    a: r(l.a),
                    b: r(l.b),
                    c: r(l.c),
                    alpha: r(l.alpha),
                    beta: r(l.beta),
                    gamma: r(l.gamma),
                },
                sites: c
                    .sites
                    .iter()
                    .map(|s| Site {
                        element: s.element,
                        frac: s.frac.map(|f| round_fraction(f, p)),
                    })
                    .collect(),
            })
        }
        Structure::Pocket(pk) => Structure::Pocket(Pocket {
            atoms: pk
                .atoms
                .iter()
                .map(|a| PocketAtom {
                    label: a.label,
                    position: a.position.map(r),
                })
                .collect(),
        }),
    }
}

fn chars(s: &str) -> impl Iterator<Item = String> + '_ {
    s.chars().map(String::from)
}

/// One labelled row of the simplified file: label plus three numbers.
fn rows(s: &Structure, p: usize) -> Vec<(String, [String; 3])> {
    let fmt3 = |v: [f64; 3]| v.map(|x| format_fixed(x, p));
    match s {
        Structure::Molecule(m) => m
            .atoms
            .iter()
            .map(|a| (a.element.symbol().to_string(), fmt3(a.position)))
            .collect(),
        Structure::Crystal(c) => c
            .sites
            .iter()
            .map(|s| {
                (
                    s.element.symbol().to_string(),
                    fmt3(s.frac.map(|f| round_fraction(f, p))),
                )
            })
            .collect(),
        Structure::Pocket(pk) => pk
            .atoms
            .iter()
            .map(|a| (a.label.indicator(), fmt3(a.position)))
            .collect(),
    }
}

fn lattice_strings(c: &Crystal, p: usize) -> Vec<String> {
    c.lattice.params().iter().map(|&v| format_fixed(v, p)).collect()
}

/// Content tokens (no BOS/EOS) of a structure under `scheme`.
pub(crate) fn content_tokens(s: &Structure, scheme: Scheme) -> Vec<String> {
    let p = scheme.precision.places();
    let mut out = Vec::new();
    match scheme.kind {
        SchemeKind::AtomCoord => {
            if let Structure::Crystal(c) = s {
                for v in lattice_strings(c, p) {
                    match scheme.lattice_mode {
                        LatticeMode::WholeToken => out.push(v),
                        LatticeMode::Char => out.extend(chars(&v)),
                    }
                }
            }
            for (label, xyz) in rows(s, p) {
                out.push(label);
                out.extend(xyz);
            }
        }
        SchemeKind::Char => {
            if let Structure::Crystal(c) = s {
                for (k, v) in lattice_strings(c, p).iter().enumerate() {
                    if k > 0 {
                        out.push(" ".into());
                    }
                    out.extend(chars(v));
                }
                out.push("#".into());
            }
            for (label, xyz) in rows(s, p) {
                out.push(label);
                for v in &xyz {
                    out.push(" ".into());
                    out.extend(chars(v));
                }
                out.push("#".into());
            }
        }
    }
    out
}

/// Maps a structure to ids bracketed by BOS/EOS.
pub fn encode(s: &Structure, vocab: &Vocabulary) -> Result<TokenSequence, TokenizeError> {
    if s.kind() != vocab.kind() {
        return Err(TokenizeError::KindMismatch {
            expected: vocab.kind(),
            found: s.kind(),
        });
    }
    let mut ids = vec![BOS];
    for t in content_tokens(s, vocab.scheme()) {
        ids.push(vocab.id(&t).ok_or(TokenizeError::OutOfVocabulary(t))?);
    }
    ids.push(EOS);
    Ok(TokenSequence { ids })
}

/// Inverse of [`encode`]; validates arbitrary (e.g. sampled) sequences against
/// the grammar and reports the first violation.
pub fn decode(ids: &[u32], vocab: &Vocabulary) -> Result<Structure, DecodeError> {
    if ids.first() != Some(&BOS) {
        return Err(DecodeError::MissingBos);
    }
    let mut toks: Vec<(usize, &str)> = Vec::new();
    let mut terminated = false;
    for (pos, &id) in ids.iter().enumerate().skip(1) {
        if id == EOS {
            terminated = true;
            break;
        }
        let tok = vocab
            .token(id)
            .ok_or(DecodeError::IdOutOfRange { position: pos, id })?;
        if Vocabulary::is_special(id) {
            return Err(DecodeError::UnexpectedSpecial { position: pos });
        }
        toks.push((pos, tok));
    }
    if !terminated {
        return Err(DecodeError::MissingEos {
            position: ids.len(),
        });
    }
    let end = toks.last().map_or(1, |t| t.0 + 1);
    if toks.is_empty() {
        return Err(DecodeError::Empty);
    }
    let scheme = vocab.scheme();
    let rows = match scheme.kind {
        SchemeKind::AtomCoord => decode_atom_coord(&toks, end, vocab)?,
        SchemeKind::Char => decode_char(&toks, end, vocab)?,
    };
    assemble(rows, vocab.kind())
}

enum Label {
    Element(Element),
    Indicator(Residue, Element),
}

struct Rows {
    lattice: Option<[f64; 6]>,
    atoms: Vec<(Label, [f64; 3])>,
}

fn looks_numeric(tok: &str) -> bool {
    let body = tok.strip_prefix('-').unwrap_or(tok);
    !body.is_empty() && body.bytes().all(|b| b.is_ascii_digit() || b == b'.')
}

fn parse_label(
    pos: usize,
    tok: &str,
    kind: StructureKind,
) -> Result<Label, DecodeError> {
    if looks_numeric(tok) || tok == " " || tok == "#" {
        return Err(DecodeError::CoordinateWhereAtomExpected { position: pos });
    }
    match kind {
        StructureKind::Pocket => parse_indicator(tok)
            .map(|(r, e)| Label::Indicator(r, e))
            .map_err(|_| DecodeError::UnknownResidueIndicator {
                position: pos,
                token: tok.to_string(),
            }),
        _ => Element::from_symbol(tok)
            .map(Label::Element)
            .map_err(|_| DecodeError::CoordinateWhereAtomExpected { position: pos }),
    }
}

fn decode_atom_coord(
    toks: &[(usize, &str)],
    end: usize,
    vocab: &Vocabulary,
) -> Result<Rows, DecodeError> {
    let scheme = vocab.scheme();
    let p = scheme.precision.places();
    let mut rest = toks;
    let mut lattice = None;
    if vocab.kind() == StructureKind::Crystal {
        let mut params = [0.0; 6];
        match scheme.lattice_mode {
            LatticeMode::WholeToken => {
                for (k, param) in params.iter_mut().enumerate() {
                    let &(pos, tok) = rest.get(k).ok_or(DecodeError::MalformedLattice { position: end })?;
                    *param = parse_fixed(tok, p).ok_or(DecodeError::MalformedLattice { position: pos })?;
                }
                rest = &rest[6..];
            }
            LatticeMode::Char => {
                let mut cursor = CharCursor { toks: rest, at: 0, end };
                for param in params.iter_mut() {
                    *param = cursor
                        .number(p)
                        .map_err(|position| DecodeError::MalformedLattice { position })?;
                }
                rest = &rest[cursor.at..];
            }
        }
        lattice = Some(params);
    }
    if rest.is_empty() {
        return Err(DecodeError::Empty);
    }
    let mut atoms = Vec::with_capacity(rest.len() / 4);
    for group in rest.chunks(4) {
        let (pos, label) = group[0];
        if group.len() < 4 {
            // report grammar errors inside the partial group before the truncation itself
            parse_label(pos, label, vocab.kind())?;
            return Err(DecodeError::TruncatedGroup { position: pos });
        }
        let label = parse_label(pos, label, vocab.kind())?;
        let mut xyz = [0.0; 3];
        for d in 0..3 {
            let (cpos, ctok) = group[d + 1];
            xyz[d] = parse_fixed(ctok, p)
                .ok_or(DecodeError::AtomWhereCoordinateExpected { position: cpos })?;
        }
        atoms.push((label, xyz));
    }
    Ok(Rows { lattice, atoms })
}

/// Reads fixed-precision numbers spelled one character per token.
struct CharCursor<'a, 'b> {
    toks: &'a [(usize, &'b str)],
    at: usize,
    end: usize,
}

impl CharCursor<'_, '_> {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn peek(&self) -> Option<&str> {
        self.toks.get(self.at).map(|t| t.1)
    }

    fn is_digit(tok: Option<&str>) -> bool {
        matches!(tok, Some(t) if t.len() == 1 && t.as_bytes()[0].is_ascii_digit())
    }

    /// Returns the failing position on error.
    fn number(&mut self, places: usize) -> Result<f64, usize> {
        let mut text = String::new();
        if self.peek() == Some("-") {
            text.push('-');
            self.at += 1;
        }
        let mut int_digits = 0;
        while Self::is_digit(self.peek()) {
            text.push_str(self.peek().unwrap());
            self.at += 1;
            int_digits += 1;
        }
        if int_digits == 0 || self.peek() != Some(".") {
            return Err(self.pos());
        }
        text.push('.');
        self.at += 1;
        for _ in 0..places {
            if !Self::is_digit(self.peek()) {
                return Err(self.pos());
            }
            text.push_str(self.peek().unwrap());
            self.at += 1;
        }
        parse_fixed(&text, places).ok_or(self.pos())
    }

    fn expect(&mut self, tok: &str) -> Result<(), usize> {
        if self.peek() == Some(tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.pos())
        }
    }
}

fn decode_char(
    toks: &[(usize, &str)],
    end: usize,
    vocab: &Vocabulary,
) -> Result<Rows, DecodeError> {
    let p = vocab.precision().places();
    let malformed = |position: usize, reason: &str| DecodeError::MalformedStream {
        position,
        reason: reason.to_string(),
    };
    if toks.last().map(|t| t.1) != Some("#") {
        return Err(malformed(end, "stream does not end with a line break"));
    }
    let mut cursor = CharCursor { toks, at: 0, end };
    let mut lattice = None;
    if vocab.kind() == StructureKind::Crystal {
        let mut params = [0.0; 6];
        for (k, param) in params.iter_mut().enumerate() {
            if k > 0 {
                cursor.expect(" ").map_err(|pos| malformed(pos, "expected a space"))?;
            }
            *param = cursor
                .number(p)
                .map_err(|pos| malformed(pos, "expected a lattice parameter"))?;
        }
        cursor.expect("#").map_err(|pos| malformed(pos, "expected end of lattice line"))?;
        lattice = Some(params);
    }
    let mut atoms = Vec::new();
    while cursor.at < toks.len() {
        let (pos, tok) = toks[cursor.at];
        if CHAR_BASE.contains(&tok) {
            return Err(malformed(pos, "expected an atom label at line start"));
        }
        let label = parse_label(pos, tok, vocab.kind())?;
        cursor.at += 1;
        let mut xyz = [0.0; 3];
        for v in &mut xyz {
            cursor.expect(" ").map_err(|pos| malformed(pos, "expected a space"))?;
            *v = cursor
                .number(p)
                .map_err(|pos| malformed(pos, "expected a coordinate"))?;
        }
        cursor.expect("#").map_err(|pos| malformed(pos, "expected end of line"))?;
        atoms.push((label, xyz));
    }
    if atoms.is_empty() {
        return Err(DecodeError::Empty);
    }
    Ok(Rows { lattice, atoms })
}

fn assemble(rows: Rows, kind: StructureKind) -> Result<Structure, DecodeError> {
    let invalid = |e: crate::error::ChemError| DecodeError::InvalidStructure(e.to_string());
    match kind {
        StructureKind::Molecule => {
            let atoms = rows
                .atoms
                .into_iter()
                .map(|(label, position)| match label {
                    Label::Element(element) => Atom { element, position },
                    Label::Indicator(_, element) => Atom { element, position },
                })
                .collect();
            Ok(Molecule::new(atoms).map_err(invalid)?.into())
        }
        StructureKind::Crystal => {
            let [a, b, c, alpha, beta, gamma] = rows.lattice.expect("crystal lattice");
            let lattice = Lattice::new(a, b, c, alpha, beta, gamma).map_err(invalid)?;
            let sites = rows
                .atoms
                .into_iter()
                .map(|(label, frac)| match label {
                    Label::Element(element) | Label::Indicator(_, element) => Site { element, frac },
                })
                .collect();
            Ok(Crystal::new(lattice, sites).map_err(invalid)?.into())
        }
        StructureKind::Pocket => {
            let labelled: Vec<(Residue, Element, [f64; 3])> = rows
                .atoms
                .into_iter()
                .map(|(label, pos)| match label {
                    Label::Indicator(r, e) => (r, e, pos),
                    Label::Element(_) => unreachable!("pocket labels are indicators"),
                })
                .collect();
            Ok(Pocket::new(group_residues(labelled)).map_err(invalid)?.into())
        }
    }
}

/// Recovers residue boundaries from a flat list of labelled atoms.
///
/// A new residue starts when the residue code changes or when the next atom
/// would exceed the current residue's heavy-atom composition. Residues are
/// numbered 1, 2, ... in order.
fn group_residues(atoms: Vec<(Residue, Element, [f64; 3])>) -> Vec<PocketAtom> {
    let mut out = Vec::with_capacity(atoms.len());
    let mut index = 0i64;
    let mut current: Option<Residue> = None;
    let mut counts: std::collections::BTreeMap<Element, usize> = Default::default();
    for (residue, element, position) in atoms {
        let full = counts.get(&element).copied().unwrap_or(0)
            >= residue.composition().get(&element).copied().unwrap_or(0);
        if current != Some(residue) || full {
            index += 1;
            current = Some(residue);
            counts.clear();
        }
        *counts.entry(element).or_insert(0) += 1;
        out.push(PocketAtom {
            label: ResidueAtom {
                residue,
                element,
                residue_index: index,
            },
            position,
        });
    }
    out
}

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::codec::content_tokens;
use super::{LatticeMode, Scheme, SchemeKind, TokenizeError};
use crate::decimal::Precision;
use crate::error::Error;
use crate::structure::{Structure, StructureKind};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;

const SPECIALS: [&str; 3] = ["<pad>", "<bos>", "<eos>"];
const FILE_MAGIC: &str = "chemlm-vocab 1";

/// Characters always present in a character-level vocabulary.
pub(crate) const CHAR_BASE: [&str; 14] = [
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "-", ".", " ", "#",
];
const DIGIT_BASE: [&str; 12] = ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "-", "."];

/// Ordered token table. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    scheme: Scheme,
    kind: StructureKind,
}

impl Vocabulary {
    fn from_parts(content: BTreeSet<String>, scheme: Scheme, kind: StructureKind) -> Self {
        let tokens: Vec<String> = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(content)
            .collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            index,
            scheme,
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn precision(&self) -> Precision {
        self.scheme.precision
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_special(id: u32) -> bool {
        id <= EOS
    }

    /// Serialized form: a header followed by one token per line.
    ///
    /// ```text
    /// chemlm-vocab 1
    /// kind=molecule
    /// scheme=atom_coord
    /// precision=2
    /// lattice_mode=whole_token
    /// tokens=N
    /// <pad>
    /// ...
    /// ```
    ///
    /// A space token is written as `\s` and a backslash as `\\`.
    pub fn to_text(&self) -> String {
        let kind = match self.kind {
            StructureKind::Molecule => "molecule",
            StructureKind::Crystal => "crystal",
            StructureKind::Pocket => "pocket",
        };
        let mut out = format!(
            "{FILE_MAGIC}\nkind={kind}\nscheme={}\nprecision={}\nlattice_mode={}\ntokens={}\n",
            self.scheme.kind,
            self.scheme.precision,
            self.scheme.lattice_mode,
            self.tokens.len()
        );
        for t in &self.tokens {
            out.push_str(&escape(t));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TokenizeError> {
        let bad = |line: usize, message: &str| TokenizeError::BadVocabFile {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines();
        if lines.next() != Some(FILE_MAGIC) {
            return Err(bad(1, "missing vocabulary header"));
        }
        let mut header = HashMap::new();
        for lineno in 2..=6 {
            let line = lines.next().ok_or_else(|| bad(lineno, "truncated header"))?;
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(lineno, "expected key=value"))?;
            header.insert(k.to_string(), (lineno, v.to_string()));
        }
        let get = |key: &str| {
            header
                .get(key)
                .cloned()
                .ok_or_else(|| bad(0, &format!("missing header key {key}")))
        };
        let (l, kind) = get("kind")?;
        let kind = match kind.as_str() {
            "molecule" => StructureKind::Molecule,
            "crystal" => StructureKind::Crystal,
            "pocket" => StructureKind::Pocket,
            _ => return Err(bad(l, "unknown structure kind")),
        };
        let (l, scheme_kind) = get("scheme")?;
        let scheme_kind: SchemeKind = scheme_kind.parse().map_err(|e: String| bad(l, &e))?;
        let (l, precision) = get("precision")?;
        let precision = precision
            .parse::<u8>()
            .ok()
            .and_then(|p| Precision::new(p).ok())
            .ok_or_else(|| bad(l, "precision must be 1, 2, or 3"))?;
        let (l, mode) = get("lattice_mode")?;
        let mode: LatticeMode = mode.parse().map_err(|e: String| bad(l, &e))?;
        let (l, count) = get("tokens")?;
        let count: usize = count.parse().map_err(|_| bad(l, "token count"))?;

        let tokens: Vec<String> = lines.map(unescape).collect();
        if tokens.len() != count {
            return Err(bad(7, "token count does not match header"));
        }
        if tokens.len() < SPECIALS.len() || tokens[..3] != SPECIALS {
            return Err(bad(7, "special tokens must come first"));
        }
        let content: BTreeSet<String> = tokens[3..].iter().cloned().collect();
        if content.len() != tokens.len() - 3 || !content.iter().eq(tokens[3..].iter()) {
            return Err(bad(10, "content tokens must be distinct and sorted"));
        }
        let scheme = Scheme::new(scheme_kind, precision).with_lattice_mode(mode);
        Ok(Vocabulary::from_parts(content, scheme, kind))
    }

    /// SHA-256 of the serialized vocabulary, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Vocabulary::from_text(&text)?)
    }
}

fn escape(token: &str) -> String {
    token.replace('\\', "\\\\").replace(' ', "\\s")
}

fn unescape(line: &str) -> String {
    let mut out = String::new();
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('s') => out.push(' '),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Collects every token needed to encode `corpus` under `scheme`.
///
/// The result does not depend on corpus order.
pub fn build_vocab(corpus: &[Structure], scheme: Scheme) -> Result<Vocabulary, TokenizeError> {
    let first = corpus.first().ok_or(TokenizeError::EmptyCorpus)?;
    let kind = first.kind();
    if corpus.iter().any(|s| s.kind() != kind) {
        return Err(TokenizeError::MixedKinds);
    }
    let mut content = BTreeSet::new();
    match scheme.kind {
        SchemeKind::Char => content.extend(CHAR_BASE.iter().map(|s| s.to_string())),
        SchemeKind::AtomCoord => {
            if kind == StructureKind::Crystal && scheme.lattice_mode == LatticeMode::Char {
                content.extend(DIGIT_BASE.iter().map(|s| s.to_string()));
            }
        }
    }
    for s in corpus {
        content.extend(content_tokens(s, scheme));
    }
    Ok(Vocabulary::from_parts(content, scheme, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::Element;
    use crate::structure::{Atom, Molecule};

    fn p(n: u8) -> Precision {
        Precision::new(n).unwrap()
    }

    fn molecule(atoms: &[(&str, [f64; 3])]) -> Structure {
        Molecule::new(
            atoms
                .iter()
                .map(|(s, pos)| Atom {
                    element: Element::from_symbol(s).unwrap(),
                    position: *pos,
                })
                .collect(),
        )
        .unwrap()
        .into()
    }

    #[test]
    fn atom_coord_content_tokens() {
        let corpus = [molecule(&[("C", [-1.98, 0.0, 0.0])])];
        let v = build_vocab(&corpus, Scheme::new(SchemeKind::AtomCoord, p(2))).unwrap();
        assert_eq!(&v.tokens()[3..], &["-1.98", "0.00", "C"]);
        assert_eq!(v.id("<pad>"), Some(PAD));
        assert_eq!(v.id("<bos>"), Some(BOS));
        assert_eq!(v.id("<eos>"), Some(EOS));
    }

    #[test]
    fn char_vocab_keeps_multiletter_symbols_whole() {
        let corpus = [molecule(&[("Cl", [1.0, 0.0, 0.0]), ("C", [0.0, 0.0, 0.0])])];
        let v = build_vocab(&corpus, Scheme::new(SchemeKind::Char, p(1))).unwrap();
        assert!(v.id("Cl").is_some());
        assert!(v.id("C").is_some());
        assert!(v.id("l").is_none());
        assert!(v.id("#").is_some() && v.id(" ").is_some() && v.id(".").is_some());
        assert_eq!(v.len(), 3 + CHAR_BASE.len() + 2);
    }

    #[test]
    fn errors() {
        assert_eq!(
            build_vocab(&[], Scheme::new(SchemeKind::Char, p(1))),
            Err(TokenizeError::EmptyCorpus)
        );
    }

    #[test]
    fn order_independent_and_round_trips_through_text() {
        let a = molecule(&[("O", [0.5, 1.25, -3.0])]);
        let b = molecule(&[("N", [2.0, 0.0, 0.0]), ("H", [0.0, 1.0, 0.0])]);
        let scheme = Scheme::new(SchemeKind::Char, p(2));
        let v1 = build_vocab(&[a.clone(), b.clone()], scheme).unwrap();
        let v2 = build_vocab(&[b, a], scheme).unwrap();
        assert_eq!(v1, v2);
        assert_eq!(v1.hash(), v2.hash());
        let text = v1.to_text();
        assert!(text.contains("\n\\s\n"));
        assert_eq!(Vocabulary::from_text(&text).unwrap(), v1);
        assert!(Vocabulary::from_text(&text.replace("precision=2", "precision=7")).is_err());
    }
}

use std::collections::BTreeMap;
use std::sync::LazyLock;

use crate::element::Element;
use crate::residue::Residue;

const OXIDATION_TXT: &str = include_str!("../../data/oxidation_states.txt");
const VALENCES_TXT: &str = include_str!("../../data/valences.txt");

fn parse_table(text: &str) -> Result<BTreeMap<Element, Vec<i32>>, String> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let sym = fields.next().expect("non-empty line");
        let element = Element::from_symbol(sym).map_err(|e| format!("line {}: {e}", n + 1))?;
        let values = fields
            .map(|f| f.parse::<i32>().map_err(|_| format!("line {}: bad value {f:?}", n + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(format!("line {}: no values for {sym}", n + 1));
        }
        out.insert(element, values);
    }
    Ok(out)
}

/// Allowed integer oxidation states per element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OxidationTable(BTreeMap<Element, Vec<i32>>);

static OXIDATION: LazyLock<OxidationTable> = LazyLock::new(|| {
    OxidationTable(parse_table(OXIDATION_TXT).expect("bundled oxidation table"))
});

impl OxidationTable {
    /// The bundled table of common oxidation states.
    pub fn standard() -> &'static OxidationTable {
        &OXIDATION
    }

    /// Parses `Symbol state state ...` lines; `#` starts a comment line.
    pub fn from_text(text: &str) -> Result<Self, String> {
        parse_table(text).map(OxidationTable)
    }

    pub fn from_map(map: BTreeMap<Element, Vec<i32>>) -> Self {
        OxidationTable(map)
    }

    pub fn states(&self, e: Element) -> Option<&[i32]> {
        self.0.get(&e).map(Vec::as_slice)
    }
}

/// Allowed neighbor counts per element for bond-graph validity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValenceTable(BTreeMap<Element, Vec<i32>>);

static VALENCES: LazyLock<ValenceTable> =
    LazyLock::new(|| ValenceTable(parse_table(VALENCES_TXT).expect("bundled valence table")));

impl ValenceTable {
    pub fn standard() -> &'static ValenceTable {
        &VALENCES
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        parse_table(text).map(ValenceTable)
    }

    pub fn allowed(&self, e: Element) -> Option<&[i32]> {
        self.0.get(&e).map(Vec::as_slice)
    }
}

/// Heavy-atom composition expected for each residue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueCompositionTable(BTreeMap<Residue, BTreeMap<Element, usize>>);

static RESIDUES: LazyLock<ResidueCompositionTable> = LazyLock::new(|| {
    ResidueCompositionTable(Residue::all().map(|r| (r, r.composition().clone())).collect())
});

impl ResidueCompositionTable {
    pub fn standard() -> &'static ResidueCompositionTable {
        &RESIDUES
    }

    pub fn from_map(map: BTreeMap<Residue, BTreeMap<Element, usize>>) -> Self {
        ResidueCompositionTable(map)
    }

    pub fn composition(&self, r: Residue) -> Option<&BTreeMap<Element, usize>> {
        self.0.get(&r)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

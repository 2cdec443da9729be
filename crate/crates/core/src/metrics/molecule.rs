use sha2::{Digest, Sha256};

use super::{MetricsError, Verdict};
use crate::geometry::distance;
use crate::metrics::ValenceTable;
use crate::structure::Molecule;

/// Lower bound below which two atoms are a clash rather than a bond.
pub const CLASH_DISTANCE: f64 = 0.4;
/// Added to the covalent-radius sum to form the bonding cutoff.
pub const BOND_TOLERANCE: f64 = 0.4;

/// Adjacency lists from distance-based bond perception.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondGraph {
    pub neighbors: Vec<Vec<usize>>,
}

impl BondGraph {
    /// Connected components, each as a sorted list of atom indices.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.neighbors.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                for &j in &self.neighbors[comp[i]] {
                    if !seen[j] {
                        seen[j] = true;
                        comp.push(j);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Bonds every pair with `d < r_i + r_j + 0.4`; also returns the first
/// pair closer than the clash floor, if any.
pub fn perceive_bonds(m: &Molecule) -> (BondGraph, Option<(usize, usize, f64)>) {
    let n = m.atoms.len();
    let mut neighbors = vec![Vec::new(); n];
    let mut clash = None;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&m.atoms[i], &m.atoms[j]);
            let d = distance(a.position, b.position);
            if d <= CLASH_DISTANCE {
                clash.get_or_insert((i, j, d));
            }
            if d < a.element.covalent_radius() + b.element.covalent_radius() + BOND_TOLERANCE {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    (BondGraph { neighbors }, clash)
}

/// Bond perception, valence, and connectivity, checked in that order.
pub fn molecule_validity(m: &Molecule, table: &ValenceTable) -> Result<Verdict, MetricsError> {
    let (graph, clash) = perceive_bonds(m);
    if let Some((i, j, d)) = clash {
        return Ok(Verdict::fail(format!("clash: atoms {i} and {j} at {d:.3} A")));
    }
    for (i, a) in m.atoms.iter().enumerate() {
        let allowed = table
            .allowed(a.element)
            .ok_or_else(|| MetricsError::NoValence(a.element.symbol().to_string()))?;
        let bonds = graph.neighbors[i].len() as i32;
        if !allowed.contains(&bonds) {
            return Ok(Verdict::fail(format!(
                "valence: atom {i} ({}) has {bonds} bonds",
                a.element.symbol()
            )));
        }
    }
    let comps = graph.components().len();
    if comps > 1 {
        return Ok(Verdict::fail(format!("disconnected: {comps} fragments")));
    }
    Ok(Verdict::pass())
}

fn digest(s: &str) -> String {
    hex::encode(&Sha256::digest(s.as_bytes())[..12])
}

/// Weisfeiler-Lehman hash of the element-labeled bond graph.
pub fn molecule_key(m: &Molecule) -> String {
    let (graph, _) = perceive_bonds(m);
    let mut labels: Vec<String> = m.atoms.iter().map(|a| a.element.symbol().to_string()).collect();
    for _ in 0..m.atoms.len().max(1) {
        let next: Vec<String> = (0..labels.len())
            .map(|i| {
                let mut nb: Vec<&str> = graph.neighbors[i].iter().map(|&j| labels[j].as_str()).collect();
                nb.sort_unstable();
                digest(&format!("{}({})", labels[i], nb.join(",")))
            })
            .collect();
        labels = next;
    }
    let mut all = labels;
    all.sort_unstable();
    format!("mol:{}", digest(&all.join(";")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::Element;
    use crate::structure::Atom;

    fn mol(atoms: &[(&str, [f64; 3])]) -> Molecule {
        Molecule::new(
            atoms
                .iter()
                .map(|(s, p)| Atom {
                    element: Element::from_symbol(s).unwrap(),
                    position: *p,
                })
                .collect(),
        )
        .unwrap()
    }

    pub(crate) fn methane() -> Molecule {
        let k = 1.09 / 3f64.sqrt();
        mol(&[
            ("C", [0.0, 0.0, 0.0]),
            ("H", [k, k, k]),
            ("H", [k, -k, -k]),
            ("H", [-k, k, -k]),
            ("H", [-k, -k, k]),
        ])
    }

    #[test]
    fn methane_is_valid() {
        assert!(molecule_validity(&methane(), ValenceTable::standard()).unwrap().valid);
    }

    #[test]
    fn distant_carbons_are_disconnected() {
        let v = molecule_validity(&mol(&[("C", [0.0; 3]), ("C", [10.0, 0.0, 0.0])]), ValenceTable::standard()).unwrap();
        assert!(!v.valid);
        // valence fails before connectivity for bare carbons
        assert!(v.reason.unwrap().starts_with("valence"));
        let h2 = mol(&[("H", [0.0; 3]), ("H", [0.74, 0.0, 0.0]), ("H", [10.0, 0.0, 0.0]), ("H", [10.74, 0.0, 0.0])]);
        let v = molecule_validity(&h2, ValenceTable::standard()).unwrap();
        assert_eq!(v.reason.as_deref(), Some("disconnected: 2 fragments"));
    }

    #[test]
    fn close_pair_is_a_clash() {
        let v = molecule_validity(&mol(&[("H", [0.0; 3]), ("H", [0.2, 0.0, 0.0])]), ValenceTable::standard()).unwrap();
        assert!(v.reason.unwrap().starts_with("clash"));
    }

    #[test]
    fn unknown_valence_is_an_error() {
        let m = mol(&[("Fe", [0.0; 3])]);
        assert!(matches!(molecule_validity(&m, ValenceTable::standard()), Err(MetricsError::NoValence(_))));
    }

    #[test]
    fn water_key_ignores_atom_order() {
        let a = mol(&[("O", [0.0; 3]), ("H", [0.96, 0.0, 0.0]), ("H", [-0.24, 0.93, 0.0])]);
        let b = mol(&[("H", [0.96, 0.0, 0.0]), ("O", [0.0; 3]), ("H", [-0.24, 0.93, 0.0])]);
        assert_eq!(molecule_key(&a), molecule_key(&b));
        let c = mol(&[("O", [0.0; 3]), ("H", [0.96, 0.0, 0.0]), ("H", [5.0, 0.0, 0.0])]);
        assert_ne!(molecule_key(&a), molecule_key(&c));
    }
}

//! Synthetic corpora for desk-scale experiments.
//!
//! These are not chemical ground truth. The construction rules are:
//!
//! * Molecules: a random tree of C/N/O heavy atoms (single bonds only) grown
//!   on ideal tetrahedral directions with standard bond lengths, saturated
//!   with hydrogens. Any placement that would put two non-bonded atoms within
//!   bonding range is rejected and redrawn.
//! * Perovskites: the cubic ABX₃ template with A at the origin, B at the
//!   body center and X on the face centers. Element triples are drawn from a
//!   list of charge-balanced combinations; the cell edge scales with the B–X
//!   radius sum plus a small jitter.
//! * Pockets: a chain of canonical residues with table-exact heavy-atom
//!   compositions. Each residue is a compact cluster around a center on a
//!   self-avoiding walk; atoms of different residues stay well apart.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{random_rotation, RotationMatrix};
use crate::element::Element;
use crate::geometry::distance;
use crate::residue::Residue;
use crate::structure::{
    Atom, Crystal, Lattice, Molecule, Pocket, PocketAtom, ResidueAtom, Site, Vec3,
};

/// Extra clearance kept between non-bonded atoms beyond the bonding cutoff,
/// so that coordinate rounding cannot create spurious bonds.
const CLEARANCE: f64 = 0.15;
const BOND_TOLERANCE: f64 = 0.4;

fn el(symbol: &str) -> Element {
    Element::from_symbol(symbol).expect("bundled element")
}

fn bond_length(a: &str, b: &str) -> f64 {
    let mut pair = [a, b];
    pair.sort();
    match pair {
        ["C", "C"] => 1.54,
        ["C", "N"] => 1.47,
        ["C", "O"] => 1.43,
        ["C", "H"] => 1.09,
        ["H", "N"] => 1.01,
        ["H", "O"] => 0.96,
        ["N", "N"] => 1.45,
        ["N", "O"] => 1.40,
        ["O", "O"] => 1.48,
        _ => 1.5,
    }
}

fn valence(symbol: &str) -> usize {
    match symbol {
        "C" => 4,
        "N" => 3,
        "O" => 2,
        _ => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// First heavy atom at the origin, fixed bond directions.
    Canonical,
    /// Centered at the origin with a uniformly random rotation.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSynth {
    pub min_heavy: usize,
    pub max_heavy: usize,
    /// Probabilities of N and O for each heavy atom; the rest is C.
    pub p_nitrogen: f64,
    pub p_oxygen: f64,
    pub orientation: Orientation,
}

impl Default for MoleculeSynth {
    fn default() -> Self {
        MoleculeSynth {
            min_heavy: 3,
            max_heavy: 8,
            p_nitrogen: 0.15,
            p_oxygen: 0.15,
            orientation: Orientation::Random,
        }
    }
}

struct Node {
    symbol: &'static str,
    pos: Vec3,
    /// Outward tetrahedral directions still free.
    free: Vec<Vec3>,
    bonds: usize,
}

fn tetrahedral(flip: bool) -> Vec<Vec3> {
    let s = 1.0 / 3f64.sqrt();
    let dirs = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    dirs.iter()
        .map(|d| if flip { [-d[0], -d[1], -d[2]] } else { *d })
        .collect()
}

fn clear_of(nodes: &[Node], pos: Vec3, symbol: &str, parent: usize) -> bool {
    let r = el(symbol).covalent_radius();
    nodes.iter().enumerate().all(|(i, n)| {
        i == parent
            || distance(n.pos, pos) > r + el(n.symbol).covalent_radius() + BOND_TOLERANCE + CLEARANCE
    })
}

fn attach<R: Rng>(nodes: &mut Vec<Node>, parent: usize, symbol: &'static str, rng: &mut R) -> bool {
    let mut slots: Vec<usize> = (0..nodes[parent].free.len()).collect();
    slots.shuffle(rng);
    let len = bond_length(nodes[parent].symbol, symbol);
    for slot in slots {
        let d = nodes[parent].free[slot];
        let p = nodes[parent].pos;
        let pos = [p[0] + len * d[0], p[1] + len * d[1], p[2] + len * d[2]];
        if !clear_of(nodes, pos, symbol, parent) {
            continue;
        }
        nodes[parent].free.remove(slot);
        nodes[parent].bonds += 1;
        // The child's bond back to the parent is -d; its other three
        // directions are the remaining members of the flipped set.
        let back = [-d[0], -d[1], -d[2]];
        let flip = tetrahedral(true).iter().any(|t| distance(*t, back) < 1e-9);
        let free = tetrahedral(flip)
            .into_iter()
            .filter(|t| distance(*t, back) > 1e-9)
            .collect();
        nodes.push(Node {
            symbol,
            pos,
            free,
            bonds: 1,
        });
        return true;
    }
    false
}

fn try_molecule<R: Rng>(cfg: &MoleculeSynth, rng: &mut R) -> Option<Molecule> {
    let n_heavy = rng.gen_range(cfg.min_heavy..=cfg.max_heavy);
    let pick = |rng: &mut R| {
        let u: f64 = rng.gen();
        if u < cfg.p_nitrogen {
            "N"
        } else if u < cfg.p_nitrogen + cfg.p_oxygen {
            "O"
        } else {
            "C"
        }
    };
    let mut nodes = vec![Node {
        symbol: "C",
        pos: [0.0; 3],
        free: tetrahedral(false),
        bonds: 0,
    }];
    while nodes.len() < n_heavy {
        let open: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].bonds < valence(nodes[i].symbol) && !nodes[i].free.is_empty())
            .collect();
        let &parent = open.choose(rng)?;
        let symbol = pick(rng);
        if !attach(&mut nodes, parent, symbol, rng) {
            return None;
        }
    }
    let heavy = nodes.len();
    for i in 0..heavy {
        while nodes[i].bonds < valence(nodes[i].symbol) {
            if !attach(&mut nodes, i, "H", rng) {
                return None;
            }
        }
    }
    let atoms = nodes
        .iter()
        .map(|n| Atom {
            element: el(n.symbol),
            position: n.pos,
        })
        .collect();
    Molecule::new(atoms).ok()
}

fn orient<R: Rng>(m: Molecule, orientation: Orientation, rng: &mut R) -> Molecule {
    match orientation {
        Orientation::Canonical => m,
        Orientation::Random => {
            let r: RotationMatrix = random_rotation(rng);
            let n = m.atoms.len() as f64;
            let mut c = [0.0; 3];
            for a in &m.atoms {
                for d in 0..3 {
                    c[d] += a.position[d] / n;
                }
            }
            let atoms = m
                .atoms
                .iter()
                .map(|a| Atom {
                    element: a.element,
                    position: r.apply([
                        a.position[0] - c[0],
                        a.position[1] - c[1],
                        a.position[2] - c[2],
                    ]),
                })
                .collect();
            Molecule { atoms }
        }
    }
}

/// Saturated acyclic C/N/O/H molecule; heavy atoms first, then hydrogens.
pub fn molecule<R: Rng>(cfg: &MoleculeSynth, rng: &mut R) -> Molecule {
    loop {
        if let Some(m) = try_molecule(cfg, rng) {
            return orient(m, cfg.orientation, rng);
        }
    }
}

/// (A, B, X) triples whose common oxidation states balance.
const PEROVSKITE_TRIPLES: &[(&[&str], &[&str], &[&str])] = &[
    (&["Ca", "Sr", "Ba", "Pb"], &["Ti", "Zr", "Hf", "Sn", "Mn"], &["O"]),
    (&["La", "Y", "Bi"], &["Al", "Fe", "Co", "Cr", "Ga", "Sc", "In"], &["O"]),
    (&["Na", "K"], &["Nb", "Ta", "V"], &["O"]),
    (&["K", "Rb", "Cs"], &["Mg", "Ni", "Co", "Fe", "Mn", "Pb", "Sn"], &["F", "Cl", "Br", "I"]),
];

/// Cubic ABX₃ cell with five sites.
pub fn perovskite<R: Rng>(rng: &mut R) -> Crystal {
    let (a_set, b_set, x_set) = PEROVSKITE_TRIPLES[rng.gen_range(0..PEROVSKITE_TRIPLES.len())];
    let a = el(a_set[rng.gen_range(0..a_set.len())]);
    let b = el(b_set[rng.gen_range(0..b_set.len())]);
    let x = el(x_set[rng.gen_range(0..x_set.len())]);
    let edge = 1.7 * (b.covalent_radius() + x.covalent_radius()) * rng.gen_range(0.98..1.02);
    let site = |element, frac| Site { element, frac };
    Crystal::new(
        Lattice::cubic(edge).expect("positive edge"),
        vec![
            site(a, [0.0, 0.0, 0.0]),
            site(b, [0.5, 0.5, 0.5]),
            site(x, [0.5, 0.5, 0.0]),
            site(x, [0.5, 0.0, 0.5]),
            site(x, [0.0, 0.5, 0.5]),
        ],
    )
    .expect("valid template")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PocketSynth {
    pub min_residues: usize,
    pub max_residues: usize,
}

impl Default for PocketSynth {
    fn default() -> Self {
        PocketSynth {
            min_residues: 6,
            max_residues: 12,
        }
    }
}

const RESIDUE_SPACING: f64 = 6.5;
const INTRA_STEP: f64 = 1.45;
const INTRA_MIN: f64 = 1.2;
const INTER_MIN: f64 = 2.0;

fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v: Vec3 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn add(a: Vec3, b: Vec3, s: f64) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// Places one residue's atoms as a compact random walk around `center`.
fn place_residue<R: Rng>(center: Vec3, n: usize, others: &[Vec3], rng: &mut R) -> Option<Vec<Vec3>> {
    'attempt: for _ in 0..200 {
        let mut pts = vec![center];
        while pts.len() < n {
            let mut placed = false;
            for _ in 0..50 {
                let from = pts[rng.gen_range(0..pts.len())];
                let p = add(from, random_unit(rng), INTRA_STEP);
                if distance(p, center) > 3.0 {
                    continue;
                }
                if pts.iter().all(|&q| distance(p, q) >= INTRA_MIN)
                    && others.iter().all(|&q| distance(p, q) >= INTER_MIN)
                {
                    pts.push(p);
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'attempt;
            }
        }
        if others.iter().all(|&q| distance(center, q) >= INTER_MIN) {
            return Some(pts);
        }
    }
    None
}

/// Chain of random canonical residues, numbered from 1.
pub fn pocket<R: Rng>(cfg: &PocketSynth, rng: &mut R) -> Pocket {
    let residues: Vec<Residue> = Residue::all().collect();
    'outer: loop {
        let n_res = rng.gen_range(cfg.min_residues..=cfg.max_residues);
        let mut atoms: Vec<PocketAtom> = Vec::new();
        let mut centers: Vec<Vec3> = Vec::new();
        for index in 1..=n_res {
            let residue = residues[rng.gen_range(0..residues.len())];
            let mut elements: Vec<Element> = residue
                .composition()
                .iter()
                .flat_map(|(&e, &k)| std::iter::repeat_n(e, k))
                .collect();
            elements.shuffle(rng);
            let mut found = None;
            for _ in 0..100 {
                let center = match centers.last() {
                    None => [0.0; 3],
                    Some(&c) => add(c, random_unit(rng), RESIDUE_SPACING),
                };
                if centers.iter().any(|&c| distance(c, center) < RESIDUE_SPACING * 0.9) {
                    continue;
                }
                let others: Vec<Vec3> = atoms.iter().map(|a| a.position).collect();
                if let Some(pts) = place_residue(center, elements.len(), &others, rng) {
                    found = Some((center, pts));
                    break;
                }
            }
            let Some((center, pts)) = found else {
                continue 'outer;
            };
            centers.push(center);
            for (element, position) in elements.into_iter().zip(pts) {
                atoms.push(PocketAtom {
                    label: ResidueAtom {
                        residue,
                        element,
                        residue_index: index as i64,
                    },
                    position,
                });
            }
        }
        return Pocket::new(atoms).expect("generated pocket is well formed");
    }
}

#![allow(dead_code)]

use chemlm::element::Element;
use chemlm::residue::Residue;
use chemlm::structure::{Atom, Crystal, Lattice, Molecule, Pocket, PocketAtom, ResidueAtom, Site, Structure};
use rand::seq::SliceRandom;
use rand::Rng;

const ELEMENTS: &[&str] = &["H", "C", "N", "O", "F", "S", "Cl", "Br", "Na", "Si", "Ti", "Ba", "Sr", "Zr"];

pub fn element<R: Rng>(rng: &mut R) -> Element {
    Element::from_symbol(ELEMENTS.choose(rng).unwrap()).unwrap()
}

fn point<R: Rng>(rng: &mut R, span: f64) -> [f64; 3] {
    [rng.gen_range(-span..span), rng.gen_range(-span..span), rng.gen_range(-span..span)]
}

pub fn molecule<R: Rng>(rng: &mut R) -> Molecule {
    let n = rng.gen_range(1..=24);
    let atoms = (0..n)
        .map(|_| Atom {
            element: element(rng),
            position: point(rng, 25.0),
        })
        .collect();
    Molecule::new(atoms).unwrap()
}

pub fn lattice<R: Rng>(rng: &mut R, lengths: std::ops::Range<f64>, angles: std::ops::Range<f64>) -> Lattice {
    loop {
        let l = Lattice::new(
            rng.gen_range(lengths.clone()),
            rng.gen_range(lengths.clone()),
            rng.gen_range(lengths.clone()),
            rng.gen_range(angles.clone()),
            rng.gen_range(angles.clone()),
            rng.gen_range(angles.clone()),
        );
        if let Ok(l) = l {
            return l;
        }
    }
}

pub fn crystal<R: Rng>(rng: &mut R) -> Crystal {
    let lat = lattice(rng, 2.0..15.0, 60.0..120.0);
    let n = rng.gen_range(1..=10);
    let sites = (0..n)
        .map(|_| Site {
            element: element(rng),
            frac: [rng.gen(), rng.gen(), rng.gen()],
        })
        .collect();
    Crystal::new(lat, sites).unwrap()
}

/// Residues with their full heavy-atom composition in shuffled order,
/// numbered 1..=R.
pub fn pocket<R: Rng>(rng: &mut R) -> Pocket {
    let residues: Vec<Residue> = Residue::all().collect();
    let n = rng.gen_range(1..=8);
    let mut atoms = Vec::new();
    for k in 0..n {
        let residue = *residues.choose(rng).unwrap();
        let mut elements: Vec<Element> = residue
            .composition()
            .iter()
            .flat_map(|(&e, &c)| std::iter::repeat_n(e, c))
            .collect();
        elements.shuffle(rng);
        for element in elements {
            atoms.push(PocketAtom {
                label: ResidueAtom {
                    residue,
                    element,
                    residue_index: k as i64 + 1,
                },
                position: point(rng, 40.0),
            });
        }
    }
    Pocket::new(atoms).unwrap()
}

pub fn structure<R: Rng>(rng: &mut R, kind: usize) -> Structure {
    match kind {
        0 => molecule(rng).into(),
        1 => crystal(rng).into(),
        _ => pocket(rng).into(),
    }
}

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Cell vectors built straight from the textbook construction: a along x,
/// b in the xy plane, c from the remaining two angle constraints.
pub fn cell_vectors(l: &Lattice) -> [[f64; 3]; 3] {
    let (al, be, ga) = (l.alpha.to_radians(), l.beta.to_radians(), l.gamma.to_radians());
    let a = [l.a, 0.0, 0.0];
    let b = [l.b * ga.cos(), l.b * ga.sin(), 0.0];
    let cx = l.c * be.cos();
    let cy = l.c * (al.cos() - be.cos() * ga.cos()) / ga.sin();
    let cz = (l.c * l.c - cx * cx - cy * cy).sqrt();
    [a, b, [cx, cy, cz]]
}

pub fn to_cart(v: &[[f64; 3]; 3], f: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (k, fk) in f.iter().enumerate() {
        for d in 0..3 {
            out[d] += fk * v[k][d];
        }
    }
    out
}

/// Shortest distance over translations with offsets in `-r..=r` per axis.
pub fn brute_min_image(l: &Lattice, f1: [f64; 3], f2: [f64; 3], r: i32) -> f64 {
    let v = cell_vectors(l);
    let mut best = f64::INFINITY;
    for i in -r..=r {
        for j in -r..=r {
            for k in -r..=r {
                let g = [f2[0] + i as f64, f2[1] + j as f64, f2[2] + k as f64];
                best = best.min(dist(to_cart(&v, f1), to_cart(&v, g)));
            }
        }
    }
    best
}

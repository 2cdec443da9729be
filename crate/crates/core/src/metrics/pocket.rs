use std::collections::BTreeMap;

use super::{unique_novel, MetricsError, ResidueCompositionTable, Verdict};
use crate::element::Element;
use crate::geometry::distance;
use crate::structure::Pocket;

/// Default inter-residue overlap threshold (Å).
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 1.1;

/// Per-residue composition check; one reason per deviating residue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueCheck {
    pub valid: bool,
    pub reasons: Vec<String>,
}

pub fn pocket_residue_check(
    p: &Pocket,
    table: &ResidueCompositionTable,
) -> Result<ResidueCheck, MetricsError> {
    if p.atoms.is_empty() {
        return Err(MetricsError::EmptyPocket);
    }
    let mut reasons = Vec::new();
    for span in p.residue_spans() {
        let first = p.atoms[span.start].label;
        let mut found: BTreeMap<Element, usize> = BTreeMap::new();
        for a in &p.atoms[span] {
            *found.entry(a.label.element).or_default() += 1;
        }
        let tag = format!("{}@{}", first.residue.code(), first.residue_index);
        let Some(expected) = table.composition(first.residue) else {
            reasons.push(format!("{tag}: no composition entry"));
            continue;
        };
        let mut problems = Vec::new();
        let elements: std::collections::BTreeSet<Element> =
            expected.keys().chain(found.keys()).copied().collect();
        for e in elements {
            let want = expected.get(&e).copied().unwrap_or(0);
            let got = found.get(&e).copied().unwrap_or(0);
            let (word, k) = if got < want {
                ("missing", want - got)
            } else {
                ("extra", got - want)
            };
            match k {
                0 => {}
                1 => problems.push(format!("{word} {}", e.symbol())),
                _ => problems.push(format!("{word} {k} {}", e.symbol())),
            }
        }
        if !problems.is_empty() {
            reasons.push(format!("{tag}: {}", problems.join(", ")));
        }
    }
    Ok(ResidueCheck {
        valid: reasons.is_empty(),
        reasons,
    })
}

/// Fails when atoms of different residues come closer than `threshold`.
pub fn pocket_overlap_check(p: &Pocket, threshold: f64) -> Result<Verdict, MetricsError> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(MetricsError::InvalidThreshold(threshold));
    }
    for i in 0..p.atoms.len() {
        for j in i + 1..p.atoms.len() {
            let (a, b) = (&p.atoms[i], &p.atoms[j]);
            if a.label.residue_index == b.label.residue_index {
                continue;
            }
            let d = distance(a.position, b.position);
            if d < threshold {
                return Ok(Verdict::fail(format!(
                    "overlap: {}@{} {} and {}@{} {} at {d:.3} A",
                    a.label.residue.code(),
                    a.label.residue_index,
                    a.label.element.symbol(),
                    b.label.residue.code(),
                    b.label.residue_index,
                    b.label.element.symbol(),
                )));
            }
        }
    }
    Ok(Verdict::pass())
}

/// Unique and novel percentages of residue-ordering strings.
pub fn residue_ordering_stats(sample: &[Pocket], train: &[Pocket]) -> Result<(f64, f64), MetricsError> {
    let s: Vec<String> = sample.iter().map(Pocket::residue_ordering).collect();
    let t: Vec<String> = train.iter().map(Pocket::residue_ordering).collect();
    unique_novel(&s, &t)
}

/// Nearest and farthest inter-atomic distances within one pocket.
pub fn pair_distance_extremes(p: &Pocket) -> Option<(f64, f64)> {
    let mut near = f64::INFINITY;
    let mut far: f64 = 0.0;
    for i in 0..p.atoms.len() {
        for j in i + 1..p.atoms.len() {
            let d = distance(p.atoms[i].position, p.atoms[j].position);
            near = near.min(d);
            far = far.max(d);
        }
    }
    near.is_finite().then_some((near, far))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residue::Residue;
    use crate::structure::{PocketAtom, ResidueAtom};

    fn atom(res: &str, el: &str, idx: i64, pos: [f64; 3]) -> PocketAtom {
        PocketAtom {
            label: ResidueAtom {
                residue: Residue::from_code(res).unwrap(),
                element: Element::from_symbol(el).unwrap(),
                residue_index: idx,
            },
            position: pos,
        }
    }

    fn gly(idx: i64, x: f64) -> Vec<PocketAtom> {
        vec![
            atom("GLY", "N", idx, [x, 0.0, 0.0]),
            atom("GLY", "C", idx, [x + 1.45, 0.0, 0.0]),
            atom("GLY", "C", idx, [x + 2.0, 1.4, 0.0]),
            atom("GLY", "O", idx, [x + 3.2, 1.6, 0.0]),
        ]
    }

    #[test]
    fn residue_composition() {
        let t = ResidueCompositionTable::standard();
        let p = Pocket::new(gly(1, 0.0)).unwrap();
        assert!(pocket_residue_check(&p, t).unwrap().valid);
        let mut missing = gly(1, 0.0);
        missing.pop();
        let r = pocket_residue_check(&Pocket::new(missing).unwrap(), t).unwrap();
        assert!(!r.valid);
        assert_eq!(r.reasons, vec!["GLY@1: missing O".to_string()]);
        let empty = Pocket { atoms: vec![] };
        assert!(matches!(pocket_residue_check(&empty, t), Err(MetricsError::EmptyPocket)));
    }

    #[test]
    fn overlap_rules() {
        let mut atoms = gly(1, 0.0);
        atoms.extend(gly(2, 8.0));
        let p = Pocket::new(atoms.clone()).unwrap();
        assert!(pocket_overlap_check(&p, 1.1).unwrap().valid);
        atoms[4].position = [3.2 + 0.8, 1.6, 0.0];
        assert!(!pocket_overlap_check(&Pocket::new(atoms).unwrap(), 1.1).unwrap().valid);
        let mut intra = gly(1, 0.0);
        intra[1].position = [0.8, 0.0, 0.0];
        assert!(pocket_overlap_check(&Pocket::new(intra).unwrap(), 1.1).unwrap().valid);
        assert!(pocket_overlap_check(&p, 0.0).is_err());
    }

    #[test]
    fn ordering_statistics() {
        let a = Pocket::new(gly(1, 0.0)).unwrap();
        let mut two = gly(1, 0.0);
        two.extend(gly(2, 8.0));
        let b = Pocket::new(two).unwrap();
        let (u, n) = residue_ordering_stats(&[a.clone(), b.clone()], &[a]).unwrap();
        assert_eq!((u, n), (100.0, 50.0));
        assert!(pair_distance_extremes(&b).unwrap().0 > 1.0);
    }
}

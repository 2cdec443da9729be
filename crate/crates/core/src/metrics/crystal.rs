use std::collections::BTreeMap;

use super::{MetricsError, OxidationTable, Verdict};
use crate::decimal::{format_fixed, round_half_away};
use crate::element::Element;
use crate::geometry::{cell_volume, PeriodicCell};
use crate::structure::{round_fraction, Crystal};

/// Sites must be strictly farther apart than this (Å).
pub const MIN_SITE_DISTANCE: f64 = 0.5;

/// amu/Å³ → g/cm³.
pub const AMU_PER_A3_TO_G_PER_CM3: f64 = 1.660_539_07;

/// Shortest distance between any two sites, counting each site's own
/// periodic images.
pub fn min_site_distance(c: &Crystal) -> Result<f64, MetricsError> {
    let cell = PeriodicCell::new(&c.lattice)?;
    let mut best = cell.shortest_translation();
    for i in 0..c.sites.len() {
        for j in i + 1..c.sites.len() {
            best = best.min(cell.min_image_distance(c.sites[i].frac, c.sites[j].frac));
        }
    }
    Ok(best)
}

pub fn crystal_structural_validity(c: &Crystal) -> Result<Verdict, MetricsError> {
    let d = min_site_distance(c)?;
    Ok(if d > MIN_SITE_DISTANCE {
        Verdict::pass()
    } else {
        Verdict::fail(format!("structure: sites {d:.3} A apart"))
    })
}

/// Whether some choice of one oxidation state per element sums to zero.
pub fn charge_neutrality(
    composition: &BTreeMap<Element, usize>,
    table: &OxidationTable,
) -> Result<Verdict, MetricsError> {
    let mut terms: Vec<(i64, Vec<i64>)> = Vec::new();
    for (&e, &count) in composition {
        let states = table
            .states(e)
            .ok_or_else(|| MetricsError::NoOxidationStates(e.symbol().to_string()))?;
        terms.push((count as i64, states.iter().map(|&s| s as i64).collect()));
    }
    // suffix bounds on the achievable remaining sum
    let n = terms.len();
    let mut lo = vec![0i64; n + 1];
    let mut hi = vec![0i64; n + 1];
    for k in (0..n).rev() {
        let (count, states) = &terms[k];
        lo[k] = lo[k + 1] + count * states.iter().min().expect("non-empty");
        hi[k] = hi[k + 1] + count * states.iter().max().expect("non-empty");
    }
    fn search(k: usize, sum: i64, terms: &[(i64, Vec<i64>)], lo: &[i64], hi: &[i64]) -> bool {
        if k == terms.len() {
            return sum == 0;
        }
        if sum + lo[k] > 0 || sum + hi[k] < 0 {
            return false;
        }
        let (count, states) = &terms[k];
        states.iter().any(|s| search(k + 1, sum + count * s, terms, lo, hi))
    }
    Ok(if search(0, 0, &terms, &lo, &hi) {
        Verdict::pass()
    } else {
        Verdict::fail("composition: no charge-neutral assignment")
    })
}

/// Mass density in g/cm³.
pub fn density(c: &Crystal) -> Result<f64, MetricsError> {
    let mass: f64 = c.sites.iter().map(|s| s.element.mass()).sum();
    Ok(mass / cell_volume(&c.lattice)? * AMU_PER_A3_TO_G_PER_CM3)
}

/// Number of distinct elements.
pub fn n_elem(composition: &BTreeMap<Element, usize>) -> usize {
    composition.len()
}

/// Formula with elements in symbol order, e.g. `Ba1O3Ti1`.
pub fn formula(composition: &BTreeMap<Element, usize>) -> String {
    let mut parts: Vec<(&str, usize)> = composition.iter().map(|(e, &n)| (e.symbol(), n)).collect();
    parts.sort_unstable();
    parts.iter().map(|(s, n)| format!("{s}{n}")).collect()
}

/// Formula, lattice to 2 decimals, and sorted 2-decimal fractional sites.
pub fn crystal_key(c: &Crystal) -> String {
    let lattice: Vec<String> = c
        .lattice
        .params()
        .iter()
        .map(|&v| format_fixed(round_half_away(v, 2), 2))
        .collect();
    let mut sites: Vec<String> = c
        .sites
        .iter()
        .map(|s| {
            let f: Vec<String> = s.frac.iter().map(|&x| format_fixed(round_fraction(x, 2), 2)).collect();
            format!("{}:{}", s.element.symbol(), f.join(","))
        })
        .collect();
    sites.sort_unstable();
    format!("cry:{}|{}|{}", formula(&c.composition()), lattice.join(","), sites.join(";"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{Lattice, Site};

    fn el(s: &str) -> Element {
        Element::from_symbol(s).unwrap()
    }

    fn cubic(a: f64, sites: &[(&str, [f64; 3])]) -> Crystal {
        Crystal::new(
            Lattice::cubic(a).unwrap(),
            sites.iter().map(|(s, f)| Site { element: el(s), frac: *f }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn threshold_is_strict() {
        let near = cubic(10.0, &[("Na", [0.0; 3]), ("Cl", [0.04, 0.0, 0.0])]);
        let far = cubic(10.0, &[("Na", [0.0; 3]), ("Cl", [0.06, 0.0, 0.0])]);
        assert!(!crystal_structural_validity(&near).unwrap().valid);
        assert!(crystal_structural_validity(&far).unwrap().valid);
        let wrapped = cubic(10.0, &[("Na", [0.98, 0.0, 0.0]), ("Cl", [0.02, 0.0, 0.0])]);
        assert!(!crystal_structural_validity(&wrapped).unwrap().valid);
        let single = cubic(5.0, &[("Po", [0.0; 3])]);
        assert!(crystal_structural_validity(&single).unwrap().valid);
        assert!(!crystal_structural_validity(&cubic(0.45, &[("Po", [0.0; 3])])).unwrap().valid);
    }

    #[test]
    fn neutrality_search() {
        let t = OxidationTable::standard();
        let comp = |pairs: &[(&str, usize)]| pairs.iter().map(|(s, n)| (el(s), *n)).collect();
        assert!(charge_neutrality(&comp(&[("Na", 1), ("Cl", 1)]), t).unwrap().valid);
        let strict = OxidationTable::from_text("Na 1\nCl -1\n").unwrap();
        assert!(!charge_neutrality(&comp(&[("Na", 2), ("Cl", 1)]), &strict).unwrap().valid);
        assert!(charge_neutrality(&comp(&[("Ar", 1)]), t).unwrap().valid);
        assert!(charge_neutrality(&comp(&[("Sr", 1), ("Ti", 1), ("O", 3)]), t).unwrap().valid);
        assert!(matches!(
            charge_neutrality(&comp(&[("Na", 1)]), &strict.clone()).map(|v| v.valid),
            Ok(false)
        ));
        assert!(matches!(
            charge_neutrality(&comp(&[("K", 1)]), &strict),
            Err(MetricsError::NoOxidationStates(_))
        ));
    }

    #[test]
    fn density_values() {
        let c = cubic(3.0, &[("C", [0.0; 3])]);
        let rho = density(&c).unwrap();
        assert!((rho - 12.011 / 27.0 * 1.660_539_07).abs() < 1e-12);
        assert!((rho - 0.7387).abs() < 1e-4);
        let big = cubic(6.0, &[("C", [0.0; 3])]);
        assert!((density(&big).unwrap() - rho / 8.0).abs() < 1e-12);
        assert_eq!(n_elem(&[(el("Na"), 1), (el("Cl"), 1)].into_iter().collect()), 2);
    }

    #[test]
    fn key_is_site_order_invariant() {
        let a = cubic(4.0, &[("Sr", [0.0; 3]), ("Ti", [0.5; 3])]);
        let b = cubic(4.0, &[("Ti", [0.5; 3]), ("Sr", [0.0; 3])]);
        assert_eq!(crystal_key(&a), crystal_key(&b));
        assert_eq!(crystal_key(&a), "cry:Sr1Ti1|4.00,4.00,4.00,90.00,90.00,90.00|Sr:0.00,0.00,0.00;Ti:0.50,0.50,0.50");
    }
}

//! Evaluation of generated structures: validity, uniqueness, novelty, and
//! distribution distances between property values.

mod crystal;
mod molecule;
mod pocket;
mod report;
mod tables;

use std::collections::HashSet;

use thiserror::Error;

use crate::error::ChemError;
use crate::structure::Structure;

pub use crystal::{
    charge_neutrality, crystal_key, crystal_structural_validity, density, formula,
    min_site_distance, n_elem, AMU_PER_A3_TO_G_PER_CM3, MIN_SITE_DISTANCE,
};
pub use molecule::{molecule_key, molecule_validity, perceive_bonds, BondGraph, BOND_TOLERANCE, CLASH_DISTANCE};
pub use pocket::{
    pair_distance_extremes, pocket_overlap_check, pocket_residue_check, residue_ordering_stats,
    ResidueCheck, DEFAULT_OVERLAP_THRESHOLD,
};
pub use report::{
    evaluate, EvalOptions, Evaluation, MetricsReport, PairStat, PropertyRow, Status,
    StructureRecord, SCHEMA_VERSION,
};
pub use tables::{OxidationTable, ResidueCompositionTable, ValenceTable};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("pocket has no residues")]
    EmptyPocket,
    #[error("no allowed valences for element {0}")]
    NoValence(String),
    #[error("no oxidation states for element {0}")]
    NoOxidationStates(String),
    #[error("overlap threshold must be positive (got {0})")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Chem(#[from] ChemError),
}

/// Pass/fail with the first failure reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub valid: bool,
    pub reason: Option<String>,
}

impl Verdict {
    pub fn pass() -> Self {
        Verdict {
            valid: true,
            reason: None,
        }
    }

    pub fn fail(reason: impl Into<String>) -> Self {
        Verdict {
            valid: false,
            reason: Some(reason.into()),
        }
    }
}

/// Identity key used for uniqueness and novelty.
///
/// Molecules hash their bond graph (conformers collide), crystals use
/// formula, rounded lattice and sorted rounded sites, pockets use the
/// residue ordering.
pub fn canonical_key(s: &Structure) -> String {
    match s {
        Structure::Molecule(m) => molecule_key(m),
        Structure::Crystal(c) => crystal_key(c),
        Structure::Pocket(p) => format!("poc:{}", p.residue_ordering()),
    }
}

/// `(unique %, novel %)`: distinct over sample size, and distinct keys
/// absent from training over distinct keys.
pub fn unique_novel(sample: &[String], train: &[String]) -> Result<(f64, f64), MetricsError> {
    if sample.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let distinct: HashSet<&String> = sample.iter().collect();
    let train: HashSet<&String> = train.iter().collect();
    let novel = distinct.iter().filter(|k| !train.contains(*k)).count();
    Ok((
        100.0 * distinct.len() as f64 / sample.len() as f64,
        100.0 * novel as f64 / distinct.len() as f64,
    ))
}

/// 1-Wasserstein distance between two empirical distributions, as the
/// integral of the absolute difference of their step CDFs.
pub fn emd_1d(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut xs: Vec<f64> = a.iter().chain(&b).copied().collect();
    xs.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ia, mut ib) = (0, 0);
    let mut total = 0.0;
    for w in xs.windows(2) {
        while ia < a.len() && a[ia] <= w[0] {
            ia += 1;
        }
        while ib < b.len() && b[ib] <= w[0] {
            ib += 1;
        }
        total += (ia as f64 / na - ib as f64 / nb).abs() * (w[1] - w[0]);
    }
    Ok(total)
}

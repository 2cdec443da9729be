use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::*;
use crate::geometry::molecular_weight;
use crate::structure::StructureKind;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub overlap_threshold: f64,
    /// Seed for the random split of the training set into halves.
    pub split_seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
            split_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    DecodeFailed,
    Invalid,
    Valid,
}

/// Outcome for one sampled sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureRecord {
    pub index: usize,
    pub status: Status,
    pub reason: String,
    pub key: Option<String>,
}

/// One property value, for distribution exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRow {
    pub source: String,
    pub index: usize,
    pub property: String,
    pub value: f64,
}

/// Nearest and farthest atom-pair distances of one valid sampled pocket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStat {
    pub index: usize,
    pub nearest: f64,
    pub farthest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub kind: StructureKind,
    pub n_samples: usize,
    pub n_decode_failed: usize,
    pub n_invalid: usize,
    pub n_valid: usize,
    pub valid_pct: f64,
    /// Over valid structures; null when none are valid.
    pub unique_pct: Option<f64>,
    pub novel_pct: Option<f64>,
    pub struct_valid_pct: Option<f64>,
    pub comp_valid_pct: Option<f64>,
    pub residue_valid_pct: Option<f64>,
    pub overlap_valid_pct: Option<f64>,
    /// Earth mover's distance of each property, valid sample vs training set.
    pub emd: BTreeMap<String, f64>,
    /// The same distances between two random halves of the training set.
    pub train_half_emd: BTreeMap<String, f64>,
    pub n_train: usize,
    pub train_valid_pct: f64,
    pub decode_failures: BTreeMap<String, usize>,
    pub invalid_reasons: BTreeMap<String, usize>,
    pub qed: Option<f64>,
    pub sa: Option<f64>,
    pub cov_r: Option<f64>,
    pub cov_p: Option<f64>,
}

/// Report plus the per-structure rows behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub records: Vec<StructureRecord>,
    pub properties: Vec<PropertyRow>,
    pub pair_stats: Vec<PairStat>,
}

struct Checked {
    verdict: Verdict,
    structural: Option<bool>,
    compositional: Option<bool>,
    residue: Option<bool>,
    overlap: Option<bool>,
}

fn check(s: &Structure, opts: &EvalOptions) -> Checked {
    let err = |e: MetricsError| Verdict::fail(format!("error: {e}"));
    match s {
        Structure::Molecule(m) => Checked {
            verdict: molecule_validity(m, ValenceTable::standard()).unwrap_or_else(err),
            structural: None,
            compositional: None,
            residue: None,
            overlap: None,
        },
        Structure::Crystal(c) => {
            let st = crystal_structural_validity(c).unwrap_or_else(err);
            let comp = charge_neutrality(&c.composition(), OxidationTable::standard()).unwrap_or_else(err);
            let verdict = if !st.valid { st.clone() } else { comp.clone() };
            Checked {
                verdict,
                structural: Some(st.valid),
                compositional: Some(comp.valid),
                residue: None,
                overlap: None,
            }
        }
        Structure::Pocket(p) => {
            let res = match pocket_residue_check(p, ResidueCompositionTable::standard()) {
                Ok(r) if r.valid => Verdict::pass(),
                Ok(r) => Verdict::fail(format!("residue: {}", r.reasons.join("; "))),
                Err(e) => err(e),
            };
            let ov = pocket_overlap_check(p, opts.overlap_threshold).unwrap_or_else(err);
            let verdict = if !res.valid { res.clone() } else { ov.clone() };
            Checked {
                verdict,
                structural: None,
                compositional: None,
                residue: Some(res.valid),
                overlap: Some(ov.valid),
            }
        }
    }
}

/// Named scalar properties compared between sample and training distributions.
fn properties(s: &Structure) -> Vec<(&'static str, f64)> {
    match s {
        Structure::Molecule(_) => vec![("mw", molecular_weight(s))],
        Structure::Crystal(c) => {
            let mut v = vec![("n_elem", n_elem(&c.composition()) as f64)];
            if let Ok(rho) = density(c) {
                v.insert(0, ("density", rho));
            }
            v
        }
        Structure::Pocket(p) => vec![
            ("n_atoms", p.atoms.len() as f64),
            ("n_residues", p.residue_spans().len() as f64),
        ],
    }
}

fn category(reason: &str) -> String {
    reason.split(':').next().unwrap_or(reason).to_string()
}

fn pct(k: usize, n: usize) -> f64 {
    100.0 * k as f64 / n as f64
}

fn emd_by_property(a: &[PropertyRow], b: &[PropertyRow]) -> BTreeMap<String, f64> {
    let names: std::collections::BTreeSet<&str> = a.iter().map(|r| r.property.as_str()).collect();
    let mut out = BTreeMap::new();
    for name in names {
        let va: Vec<f64> = a.iter().filter(|r| r.property == name).map(|r| r.value).collect();
        let vb: Vec<f64> = b.iter().filter(|r| r.property == name).map(|r| r.value).collect();
        if let Ok(d) = emd_1d(&va, &vb) {
            out.insert(name.to_string(), d);
        }
    }
    out
}

/// Buckets every sample as decode-failed, invalid, or valid and computes
/// the aggregate metrics against the training set.
///
/// `samples` holds either a decoded structure or the decode-failure label.
pub fn evaluate(
    samples: &[Result<Structure, String>],
    train: &[Structure],
    kind: StructureKind,
    opts: &EvalOptions,
) -> Result<Evaluation, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    if !(opts.overlap_threshold > 0.0 && opts.overlap_threshold.is_finite()) {
        return Err(MetricsError::InvalidThreshold(opts.overlap_threshold));
    }
    let checked: Vec<Option<Checked>> = samples
        .par_iter()
        .map(|s| s.as_ref().ok().map(|s| check(s, opts)))
        .collect();

    let mut records = Vec::with_capacity(samples.len());
    let mut decode_failures = BTreeMap::new();
    let mut invalid_reasons = BTreeMap::new();
    let mut sample_props = Vec::new();
    let mut pair_stats = Vec::new();
    let mut valid_keys = Vec::new();
    let (mut n_struct, mut n_comp, mut n_res, mut n_ov) = (0, 0, 0, 0);
    for (index, (s, c)) in samples.iter().zip(&checked).enumerate() {
        let (status, reason, key) = match (s, c) {
            (Err(label), _) => {
                *decode_failures.entry(label.clone()).or_insert(0) += 1;
                (Status::DecodeFailed, label.clone(), None)
            }
            (Ok(s), Some(c)) => {
                n_struct += c.structural.unwrap_or(false) as usize;
                n_comp += c.compositional.unwrap_or(false) as usize;
                n_res += c.residue.unwrap_or(false) as usize;
                n_ov += c.overlap.unwrap_or(false) as usize;
                let key = canonical_key(s);
                if c.verdict.valid {
                    valid_keys.push(key.clone());
                    for (name, value) in properties(s) {
                        sample_props.push(PropertyRow {
                            source: "sample".into(),
                            index,
                            property: name.into(),
                            value,
                        });
                    }
                    if let Some((nearest, farthest)) = s.as_pocket().and_then(pair_distance_extremes) {
                        pair_stats.push(PairStat {
                            index,
                            nearest,
                            farthest,
                        });
                    }
                    (Status::Valid, String::new(), Some(key))
                } else {
                    let reason = c.verdict.reason.clone().unwrap_or_default();
                    *invalid_reasons.entry(category(&reason)).or_insert(0) += 1;
                    (Status::Invalid, reason, Some(key))
                }
            }
            (Ok(_), None) => unreachable!("every decoded sample is checked"),
        };
        records.push(StructureRecord {
            index,
            status,
            reason,
            key,
        });
    }

    let train_checked: Vec<(bool, String)> = train
        .par_iter()
        .map(|s| (check(s, opts).verdict.valid, canonical_key(s)))
        .collect();
    let train_keys: Vec<String> = train_checked.iter().map(|(_, k)| k.clone()).collect();
    let train_valid = train_checked.iter().filter(|(v, _)| *v).count();
    let train_props: Vec<PropertyRow> = train
        .iter()
        .enumerate()
        .flat_map(|(index, s)| {
            properties(s).into_iter().map(move |(name, value)| PropertyRow {
                source: "train".into(),
                index,
                property: name.into(),
                value,
            })
        })
        .collect();

    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.split_seed));
    let half = order.len() / 2;
    let first: std::collections::HashSet<usize> = order[..half].iter().copied().collect();
    let (ha, hb): (Vec<PropertyRow>, Vec<PropertyRow>) =
        train_props.iter().cloned().partition(|r| first.contains(&r.index));

    let n = samples.len();
    let n_decode_failed = records.iter().filter(|r| r.status == Status::DecodeFailed).count();
    let n_valid = valid_keys.len();
    let (unique_pct, novel_pct) = match unique_novel(&valid_keys, &train_keys) {
        Ok((u, v)) => (Some(u), Some(v)),
        Err(_) => (None, None),
    };
    let is = |k: StructureKind| kind == k;
    let report = MetricsReport {
        schema_version: SCHEMA_VERSION,
        kind,
        n_samples: n,
        n_decode_failed,
        n_invalid: n - n_decode_failed - n_valid,
        n_valid,
        valid_pct: pct(n_valid, n),
        unique_pct,
        novel_pct,
        struct_valid_pct: is(StructureKind::Crystal).then(|| pct(n_struct, n)),
        comp_valid_pct: is(StructureKind::Crystal).then(|| pct(n_comp, n)),
        residue_valid_pct: is(StructureKind::Pocket).then(|| pct(n_res, n)),
        overlap_valid_pct: is(StructureKind::Pocket).then(|| pct(n_ov, n)),
        emd: emd_by_property(&sample_props, &train_props),
        train_half_emd: emd_by_property(&ha, &hb),
        n_train: train.len(),
        train_valid_pct: if train.is_empty() { 0.0 } else { pct(train_valid, train.len()) },
        decode_failures,
        invalid_reasons,
        qed: None,
        sa: None,
        cov_r: None,
        cov_p: None,
    };
    let mut properties = sample_props;
    properties.extend(train_props);
    Ok(Evaluation {
        report,
        records,
        properties,
        pair_stats,
    })
}

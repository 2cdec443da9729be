use serde::{Deserialize, Serialize};

use crate::geometry::{centroid_of, distance};
use crate::structure::{Pocket, Vec3};

/// Inclusive atom-count window for pruned pockets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetRange {
    pub min: usize,
    pub max: usize,
}

impl TargetRange {
    pub fn new(min: usize, max: usize) -> Option<Self> {
        (min <= max && max > 0).then_some(TargetRange { min, max })
    }
}

impl Default for TargetRange {
    fn default() -> Self {
        TargetRange { min: 200, max: 250 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneWarning {
    /// The input already had fewer atoms than the range minimum.
    BelowMinimum,
    /// The last residue removal dropped the count below the range minimum.
    Overshot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub pocket: Pocket,
    pub warning: Option<PruneWarning>,
}

/// Removes whole residues, farthest centroid from `center` first, until the
/// atom count is at most `target.max`. Equidistant residues are removed in
/// order of decreasing residue index. Surviving atoms keep their order.
pub fn prune_pocket(p: &Pocket, center: Vec3, target: TargetRange) -> PruneOutcome {
    let total = p.atoms.len();
    if total < target.min {
        return PruneOutcome {
            pocket: p.clone(),
            warning: Some(PruneWarning::BelowMinimum),
        };
    }

    let spans = p.residue_spans();
    let mut order: Vec<(f64, i64, usize)> = spans
        .iter()
        .enumerate()
        .map(|(k, span)| {
            let pts: Vec<Vec3> = p.atoms[span.clone()].iter().map(|a| a.position).collect();
            let d = distance(centroid_of(&pts), center);
            (d, p.atoms[span.start].label.residue_index, k)
        })
        .collect();
    // farthest first; ties broken by the larger residue index
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));

    let mut keep = vec![true; spans.len()];
    let mut count = total;
    for &(_, _, k) in &order {
        if count <= target.max {
            break;
        }
        keep[k] = false;
        count -= spans[k].len();
    }

    let atoms = spans
        .iter()
        .zip(&keep)
        .filter(|(_, &kept)| kept)
        .flat_map(|(span, _)| p.atoms[span.clone()].iter().copied())
        .collect();
    PruneOutcome {
        pocket: Pocket { atoms },
        warning: (count < target.min).then_some(PruneWarning::Overshot),
    }
}

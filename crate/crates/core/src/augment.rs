//! Random rigid-rotation augmentation, redrawn every epoch.
//!
//! Molecules and pockets are rotated about their geometric center. Rotating
//! fractional coordinates would break the lattice frame, so crystals instead
//! get an optional random origin shift `f <- (f + u) mod 1`, which is off by
//! default.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::centroid;
use crate::structure::{Crystal, Site, Structure, Vec3};
use crate::tokenizer::{encode, round_coords, TokenSequence, Vocabulary};

/// A proper rotation (orthogonal, determinant +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Rotation from a unit quaternion `(w, x, y, z)`.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let [w, x, y, z] = q;
        RotationMatrix([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - z * w),
                2.0 * (x * z + y * w),
            ],
            [
                2.0 * (x * y + z * w),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - x * w),
            ],
            [
                2.0 * (x * z - y * w),
                2.0 * (y * z + x * w),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ])
    }

    /// Rotation by `angle` radians about `axis` (need not be normalized).
    pub fn about_axis(axis: Vec3, angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let (s, c) = (angle / 2.0).sin_cos();
        RotationMatrix::from_quaternion([c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n])
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn compose(&self, other: &RotationMatrix) -> RotationMatrix {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        RotationMatrix(out)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of |RᵀR − I|.
    pub fn orthogonality_error(&self) -> f64 {
        let m = &self.0;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Rotation angle in [0, π].
    pub fn angle(&self) -> f64 {
        let trace = self.0[0][0] + self.0[1][1] + self.0[2][2];
        ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }
}

/// Uniform sample from SO(3) via a uniformly distributed unit quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let u3: f64 = rng.gen();
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = [
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    ];
    RotationMatrix::from_quaternion(q)
}

/// `p <- R (p - c) + c` for every atom, with `c` the geometric center.
///
/// Crystals are returned unchanged; see [`origin_shift`].
pub fn rotate_about_center(s: &Structure, r: &RotationMatrix) -> Structure {
    let rotate = |center: Vec3, p: Vec3| {
        let d = r.apply([p[0] - center[0], p[1] - center[1], p[2] - center[2]]);
        [d[0] + center[0], d[1] + center[1], d[2] + center[2]]
    };
    match s {
        Structure::Molecule(m) => {
            let c = centroid(s).expect("non-empty molecule");
            let mut m = m.clone();
            for a in &mut m.atoms {
                a.position = rotate(c, a.position);
            }
            Structure::Molecule(m)
        }
        Structure::Pocket(p) => {
            let c = centroid(s).expect("non-empty pocket");
            let mut p = p.clone();
            for a in &mut p.atoms {
                a.position = rotate(c, a.position);
            }
            Structure::Pocket(p)
        }
        Structure::Crystal(_) => s.clone(),
    }
}

/// Cyclic shift of the crystal origin by `u` (fractional units).
pub fn origin_shift(c: &Crystal, u: Vec3) -> Crystal {
    Crystal::new(
        c.lattice,
        c.sites
            .iter()
            .map(|s| Site {
                element: s.element,
                frac: [s.frac[0] + u[0], s.frac[1] + u[1], s.frac[2] + u[2]],
            })
            .collect(),
    )
    .expect("shifted crystal stays valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub enabled: bool,
    /// Apply origin shifts to crystals (rotations never apply to them).
    pub crystal_shift: bool,
    /// Redraws allowed when the augmented structure needs a token the
    /// vocabulary lacks, before falling back to the original.
    pub attempts: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            enabled: false,
            crystal_shift: false,
            attempts: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentResult {
    Disabled,
    Augmented { attempt: usize },
    FellBack,
}

/// Draws a fresh augmentation, re-rounds it to the vocabulary precision, and
/// encodes it. Falls back to the un-augmented encoding when every attempt
/// produces an out-of-vocabulary token.
pub fn augment_and_encode<R: Rng + ?Sized>(
    s: &Structure,
    base: &TokenSequence,
    vocab: &Vocabulary,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> (TokenSequence, AugmentResult) {
    let applies = match s {
        Structure::Crystal(_) => cfg.crystal_shift,
        _ => true,
    };
    if !cfg.enabled || !applies {
        return (base.clone(), AugmentResult::Disabled);
    }
    for attempt in 0..cfg.attempts {
        let moved = match s {
            Structure::Crystal(c) => {
                let u = [rng.gen(), rng.gen(), rng.gen()];
                Structure::Crystal(origin_shift(c, u))
            }
            _ => rotate_about_center(s, &random_rotation(rng)),
        };
        let rounded = round_coords(&moved, vocab.precision());
        if let Ok(seq) = encode(&rounded, vocab) {
            return (seq, AugmentResult::Augmented { attempt });
        }
    }
    (base.clone(), AugmentResult::FellBack)
}

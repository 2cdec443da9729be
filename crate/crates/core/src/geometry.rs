//! Cell geometry, periodic distances, superposition, and simple structure properties.

use nalgebra::{Matrix3, Vector3};

use crate::error::ChemError;
use crate::structure::{volume_radicand, Lattice, RADICAND_EPS, Structure, Vec3};

fn cos_deg(angle: f64) -> f64 {
    // exact zero for right angles so orthogonal cells stay exact
    if angle == 90.0 {
        0.0
    } else {
        angle.to_radians().cos()
    }
}

fn sin_deg(angle: f64) -> f64 {
    if angle == 90.0 {
        1.0
    } else {
        angle.to_radians().sin()
    }
}

/// Unit-cell volume in Å³.
pub fn cell_volume(lat: &Lattice) -> Result<f64, ChemError> {
    lat.validate()?;
    let (ca, cb, cg) = (cos_deg(lat.alpha), cos_deg(lat.beta), cos_deg(lat.gamma));
    let radicand = 1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg;
    if radicand <= RADICAND_EPS || volume_radicand(lat) <= RADICAND_EPS {
        return Err(ChemError::InvalidLattice("non-realizable angle triple".into()));
    }
    Ok(lat.a * lat.b * lat.c * radicand.sqrt())
}

/// Cartesian cell vectors: `a` along x, `b` in the xy-plane.
pub fn cell_vectors(lat: &Lattice) -> Result<[Vec3; 3], ChemError> {
    let volume = cell_volume(lat)?;
    let (ca, cb, cg) = (cos_deg(lat.alpha), cos_deg(lat.beta), cos_deg(lat.gamma));
    let sg = sin_deg(lat.gamma);
    let a = [lat.a, 0.0, 0.0];
    let b = [lat.b * cg, lat.b * sg, 0.0];
    let c = [
        lat.c * cb,
        lat.c * (ca - cb * cg) / sg,
        volume / (lat.a * lat.b * sg),
    ];
    Ok([a, b, c])
}

pub fn frac_to_cart(lat: &Lattice, f: Vec3) -> Result<Vec3, ChemError> {
    let [a, b, c] = cell_vectors(lat)?;
    Ok(combine(&[a, b, c], f))
}

pub fn cart_to_frac(lat: &Lattice, p: Vec3) -> Result<Vec3, ChemError> {
    let [a, b, c] = cell_vectors(lat)?;
    // the cell matrix is upper triangular in this convention
    let fz = p[2] / c[2];
    let fy = (p[1] - fz * c[1]) / b[1];
    let fx = (p[0] - fy * b[0] - fz * c[0]) / a[0];
    Ok([fx, fy, fz])
}

fn combine(vectors: &[Vec3; 3], f: Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for (k, v) in vectors.iter().enumerate() {
        for d in 0..3 {
            out[d] += f[k] * v[d];
        }
    }
    out
}

fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn distance(p: Vec3, q: Vec3) -> f64 {
    norm([p[0] - q[0], p[1] - q[1], p[2] - q[2]])
}

/// Precomputed cell for repeated periodic distance queries.
#[derive(Debug, Clone)]
pub struct PeriodicCell {
    vectors: [Vec3; 3],
    /// Norms of the reciprocal vectors; bound how far the image search must go.
    recip: [f64; 3],
}

fn cross(u: Vec3, v: Vec3) -> Vec3 {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

impl PeriodicCell {
    pub fn new(lat: &Lattice) -> Result<Self, ChemError> {
        let vectors = cell_vectors(lat)?;
        let volume = cell_volume(lat)?;
        let [a, b, c] = vectors;
        Ok(PeriodicCell {
            vectors,
            recip: [
                norm(cross(b, c)) / volume,
                norm(cross(c, a)) / volume,
                norm(cross(a, b)) / volume,
            ],
        })
    }

    pub fn vectors(&self) -> [Vec3; 3] {
        self.vectors
    }

    /// Shortest distance between `f1` and any periodic image of `f2`.
    ///
    /// The fractional separation is first reduced into [-0.5, 0.5). Any image
    /// closer than that reduced vector has each fractional component within
    /// `d0 * |b*_i|` of zero, which bounds the search exactly.
    pub fn min_image_distance(&self, f1: Vec3, f2: Vec3) -> f64 {
        let mut delta = [0.0; 3];
        for d in 0..3 {
            let x = f2[d] - f1[d];
            delta[d] = x - x.round();
        }
        let d0 = norm(combine(&self.vectors, delta));
        self.min_over_images(delta, d0, false)
    }

    /// Length of the shortest non-zero lattice translation.
    pub fn shortest_translation(&self) -> f64 {
        let d0 = self.vectors.iter().map(|v| norm(*v)).fold(f64::INFINITY, f64::min);
        self.min_over_images([0.0; 3], d0, true)
    }

    fn min_over_images(&self, delta: Vec3, bound: f64, skip_zero: bool) -> f64 {
        let range = |i: usize| {
            let r = bound * self.recip[i] + 1e-9;
            ((-delta[i] - r).ceil() as i64, (-delta[i] + r).floor() as i64)
        };
        let (r0, r1, r2) = (range(0), range(1), range(2));
        let mut best = bound;
        for i in r0.0..=r0.1 {
            for j in r1.0..=r1.1 {
                for k in r2.0..=r2.1 {
                    if skip_zero && i == 0 && j == 0 && k == 0 {
                        continue;
                    }
                    let f = [
                        delta[0] + i as f64,
                        delta[1] + j as f64,
                        delta[2] + k as f64,
                    ];
                    best = best.min(norm(combine(&self.vectors, f)));
                }
            }
        }
        best
    }
}

pub fn min_image_distance(lat: &Lattice, f1: Vec3, f2: Vec3) -> Result<f64, ChemError> {
    Ok(PeriodicCell::new(lat)?.min_image_distance(f1, f2))
}

/// RMSD after optimal rigid superposition of `b` onto `a` (index-wise correspondence).
pub fn kabsch_rmsd(a: &[Vec3], b: &[Vec3]) -> Result<f64, ChemError> {
    if a.len() != b.len() {
        return Err(ChemError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(ChemError::Empty);
    }
    let ca = mean_point(a);
    let cb = mean_point(b);
    let pa: Vec<Vector3<f64>> = a
        .iter()
        .map(|p| Vector3::new(p[0] - ca[0], p[1] - ca[1], p[2] - ca[2]))
        .collect();
    let pb: Vec<Vector3<f64>> = b
        .iter()
        .map(|p| Vector3::new(p[0] - cb[0], p[1] - cb[1], p[2] - cb[2]))
        .collect();

    let mut h = Matrix3::zeros();
    for (p, q) in pb.iter().zip(&pa) {
        h += p * q.transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, if d < 0.0 { -1.0 } else { 1.0 }));
    let rot = v * correction * u.transpose();

    let sum_sq: f64 = pb
        .iter()
        .zip(&pa)
        .map(|(p, q)| (rot * p - q).norm_squared())
        .sum();
    Ok((sum_sq / a.len() as f64).sqrt())
}

fn mean_point(points: &[Vec3]) -> Vec3 {
    let n = points.len() as f64;
    let mut c = [0.0; 3];
    for p in points {
        for d in 0..3 {
            c[d] += p[d];
        }
    }
    c.map(|v| v / n)
}

/// Sum of atomic masses in amu.
pub fn molecular_weight(s: &Structure) -> f64 {
    s.elements().iter().map(|e| e.mass()).sum()
}

/// Cartesian positions of every atom (crystal sites are converted from fractional).
pub fn cartesian_positions(s: &Structure) -> Result<Vec<Vec3>, ChemError> {
    Ok(match s {
        Structure::Molecule(m) => m.atoms.iter().map(|a| a.position).collect(),
        Structure::Pocket(p) => p.atoms.iter().map(|a| a.position).collect(),
        Structure::Crystal(c) => {
            let vectors = cell_vectors(&c.lattice)?;
            c.sites.iter().map(|s| combine(&vectors, s.frac)).collect()
        }
    })
}

/// Unweighted geometric center of the atom positions.
pub fn centroid(s: &Structure) -> Result<Vec3, ChemError> {
    let points = cartesian_positions(s)?;
    if points.is_empty() {
        return Err(ChemError::Empty);
    }
    Ok(mean_point(&points))
}

pub(crate) fn centroid_of(points: &[Vec3]) -> Vec3 {
    mean_point(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::Element;
    use crate::structure::{Atom, Molecule};

    fn lat(a: f64, b: f64, c: f64, al: f64, be: f64, ga: f64) -> Lattice {
        Lattice::new(a, b, c, al, be, ga).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn volumes() {
        assert_eq!(cell_volume(&lat(2.0, 2.0, 2.0, 90.0, 90.0, 90.0)).unwrap(), 8.0);
        assert_eq!(cell_volume(&lat(1.0, 2.0, 3.0, 90.0, 90.0, 90.0)).unwrap(), 6.0);
        let hex = cell_volume(&lat(1.0, 1.0, 1.0, 90.0, 90.0, 120.0)).unwrap();
        assert!(close(hex, 0.8660254, 1e-7), "{hex}");
        let bad = Lattice {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            alpha: 120.0,
            beta: 120.0,
            gamma: 120.0,
        };
        assert!(matches!(cell_volume(&bad), Err(ChemError::InvalidLattice(_))));
    }

    #[test]
    fn fractional_to_cartesian() {
        let cube = lat(5.0, 5.0, 5.0, 90.0, 90.0, 90.0);
        assert_eq!(frac_to_cart(&cube, [0.5, 0.5, 0.5]).unwrap(), [2.5, 2.5, 2.5]);
        assert_eq!(frac_to_cart(&cube, [0.0; 3]).unwrap(), [0.0; 3]);
        let hex = lat(1.0, 1.0, 1.0, 90.0, 90.0, 120.0);
        let p = frac_to_cart(&hex, [0.0, 1.0, 0.0]).unwrap();
        assert!(close(p[0], -0.5, 1e-12) && close(p[1], 0.8660254, 1e-7) && p[2] == 0.0);
        let back = cart_to_frac(&hex, p).unwrap();
        assert!(close(back[1], 1.0, 1e-12) && close(back[0], 0.0, 1e-12));
    }

    #[test]
    fn minimum_image() {
        let cube = lat(5.0, 5.0, 5.0, 90.0, 90.0, 90.0);
        let d = min_image_distance(&cube, [0.1, 0.0, 0.0], [0.9, 0.0, 0.0]).unwrap();
        assert!(close(d, 1.0, 1e-12));
        assert_eq!(min_image_distance(&cube, [0.3; 3], [0.3; 3]).unwrap(), 0.0);
        let d = min_image_distance(&cube, [0.0; 3], [0.5; 3]).unwrap();
        assert!(close(d, 4.330127, 1e-6));
        let cell = PeriodicCell::new(&cube).unwrap();
        assert_eq!(cell.shortest_translation(), 5.0);
    }

    #[test]
    fn kabsch_cases() {
        let a = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let b = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert!(close(kabsch_rmsd(&a, &b).unwrap(), 0.5, 1e-12));
        assert_eq!(kabsch_rmsd(&[[1.0, 2.0, 3.0]], &[[1.0, 2.0, 3.0]]).unwrap(), 0.0);

        let pts = [[1.0, 0.2, 0.0], [0.0, 1.5, 0.3], [-0.7, 0.1, 2.0], [0.4, -1.0, -0.5]];
        // 90 degrees about z, then a translation
        let moved: Vec<Vec3> = pts.iter().map(|p| [-p[1] + 3.0, p[0] - 1.0, p[2] + 0.5]).collect();
        assert!(kabsch_rmsd(&pts, &moved).unwrap() < 1e-6);
        assert!(matches!(
            kabsch_rmsd(&pts, &moved[..2]),
            Err(ChemError::LengthMismatch(4, 2))
        ));
    }

    #[test]
    fn kabsch_rejects_reflections() {
        // a mirror image of a chiral tetrahedron cannot be superposed by a proper rotation
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]];
        let mirrored: Vec<Vec3> = pts.iter().map(|p| [p[0], p[1], -p[2]]).collect();
        assert!(kabsch_rmsd(&pts, &mirrored).unwrap() > 0.1);
    }

    #[test]
    fn weights_and_centroids() {
        let h = Element::from_symbol("H").unwrap();
        let o = Element::from_symbol("O").unwrap();
        let water = Structure::Molecule(
            Molecule::new(vec![
                Atom { element: o, position: [0.0; 3] },
                Atom { element: h, position: [2.0, 0.0, 0.0] },
                Atom { element: h, position: [0.0, 2.0, 0.0] },
            ])
            .unwrap(),
        );
        assert!(close(molecular_weight(&water), 18.015, 1e-9));
        let c = centroid(&water).unwrap();
        assert!(close(c[0], 2.0 / 3.0, 1e-12) && close(c[1], 2.0 / 3.0, 1e-12));

        let square = Structure::Molecule(
            Molecule::new(
                [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]
                    .into_iter()
                    .map(|p| Atom { element: h, position: p })
                    .collect(),
            )
            .unwrap(),
        );
        assert_eq!(centroid(&square).unwrap(), [0.5, 0.5, 0.0]);
    }
}

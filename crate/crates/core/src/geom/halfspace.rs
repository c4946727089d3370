//! Halfspace representation of 2-D zonotopes.
//!
//! A planar zonotope with ℓ generators is exactly the intersection of 2ℓ
//! halfspaces, two per generator direction: each generator contributes an
//! outward normal (its perpendicular), and the offset is the support value
//! of the set in that direction. Collision constraints evaluate these
//! halfspaces at candidate points, so the conversion must be exact.

use nalgebra::{DMatrix, DVector};

use super::zonotope::Zonotope;
use super::GeomError;

#[derive(Clone, Debug)]
pub struct HalfspaceRep {
    /// Constraint normals, one per row.
    pub b_mat: DMatrix<f64>,
    /// Offsets; the represented set is { a : B·a ≤ b }.
    pub b_vec: DVector<f64>,
}

impl HalfspaceRep {
    /// Largest constraint residual max_i (B·a − b)_i; ≤ 0 means `a` is inside.
    pub fn eval(&self, a: &DVector<f64>) -> f64 {
        let r = &self.b_mat * a - &self.b_vec;
        r.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Convert a 2-D zonotope to halfspace form.
///
/// Zero generator columns are dropped first. Full-rank inputs use the
/// normal-per-generator construction; degenerate inputs (point, segment)
/// return four constraints describing the set exactly.
pub fn to_halfspace(z: &Zonotope) -> Result<HalfspaceRep, GeomError> {
    if z.dim() != 2 {
        return Err(GeomError::NotTwoDimensional { got: z.dim() });
    }
    let z = z.drop_zero_columns();
    let l = z.num_generators();
    let c = &z.center;

    if l == 0 {
        // Point: four axis-aligned constraints pinning both coordinates.
        let b_mat = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let b_vec = DVector::from_vec(vec![c[0], -c[0], c[1], -c[1]]);
        return Ok(HalfspaceRep { b_mat, b_vec });
    }

    // Rank check: are all generators parallel?
    let g0 = z.generators.column(0);
    let parallel = (1..l).all(|k| {
        let g = z.generators.column(k);
        (g0[0] * g[1] - g0[1] * g[0]).abs() == 0.0
    });
    if parallel {
        // Segment: pin the normal direction, cap the axial direction at the
        // summed generator length.
        let len = g0.norm();
        let dir = [g0[0] / len, g0[1] / len];
        let nrm = [-dir[1], dir[0]];
        let extent: f64 = (0..l)
            .map(|k| {
                let g = z.generators.column(k);
                (dir[0] * g[0] + dir[1] * g[1]).abs()
            })
            .sum();
        let b_mat = DMatrix::from_row_slice(
            4,
            2,
            &[nrm[0], nrm[1], -nrm[0], -nrm[1], dir[0], dir[1], -dir[0], -dir[1]],
        );
        let nc = nrm[0] * c[0] + nrm[1] * c[1];
        let dc = dir[0] * c[0] + dir[1] * c[1];
        let b_vec = DVector::from_vec(vec![nc, -nc, dc + extent, -dc + extent]);
        return Ok(HalfspaceRep { b_mat, b_vec });
    }

    // General position: one normalized perpendicular per generator.
    let mut b_plus = DMatrix::zeros(l, 2);
    for k in 0..l {
        let g = z.generators.column(k);
        let n = [-g[1], g[0]];
        let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
        b_plus[(k, 0)] = n[0] / len;
        b_plus[(k, 1)] = n[1] / len;
    }
    // Support offsets: projection of the center plus total generator sweep.
    let bc = &b_plus * c;
    let bg = &b_plus * &z.generators;
    let sweep = DVector::from_iterator(l, (0..l).map(|k| bg.row(k).iter().map(|v| v.abs()).sum::<f64>()));

    let mut b_mat = DMatrix::zeros(2 * l, 2);
    b_mat.rows_mut(0, l).copy_from(&b_plus);
    b_mat.rows_mut(l, l).copy_from(&(-&b_plus));
    let mut b_vec = DVector::zeros(2 * l);
    for k in 0..l {
        b_vec[k] = bc[k] + sweep[k];
        b_vec[l + k] = -bc[k] + sweep[k];
    }
    Ok(HalfspaceRep { b_mat, b_vec })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use rand::prelude::*;

    #[test]
    fn unit_square_constraints() {
        let z = Zonotope::new(dvector![0.0, 0.0], dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        let h = to_halfspace(&z).unwrap();
        assert_eq!(h.b_mat.nrows(), 4);
        // Equivalent to |x| <= 1, |y| <= 1.
        assert!(h.eval(&dvector![0.0, 0.0]) < 0.0);
        assert!(h.eval(&dvector![1.0, 1.0]).abs() < 1e-12); // corner on boundary
        assert!(h.eval(&dvector![1.1, 0.0]) > 0.0);
        assert!(h.eval(&dvector![0.0, -1.1]) > 0.0);
        assert!(h.eval(&dvector![0.999, -0.999]) < 0.0);
    }

    #[test]
    fn translated_square_same_normals_shifted_offsets() {
        let z0 = Zonotope::new(dvector![0.0, 0.0], dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        let z1 = Zonotope::new(dvector![3.0, 4.0], dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        let h0 = to_halfspace(&z0).unwrap();
        let h1 = to_halfspace(&z1).unwrap();
        assert_eq!(h0.b_mat, h1.b_mat);
        assert!(h1.eval(&dvector![3.0, 4.0]) < 0.0);
        assert!(h1.eval(&dvector![4.0, 5.0]).abs() < 1e-12);
        assert!(h1.eval(&dvector![0.0, 0.0]) > 0.0);
    }

    #[test]
    fn point_and_segment_degenerate_paths() {
        // Pure point: only the point itself satisfies all constraints.
        let p = Zonotope::point(dvector![2.0, -1.0]);
        let h = to_halfspace(&p).unwrap();
        assert!(h.eval(&dvector![2.0, -1.0]).abs() < 1e-12);
        assert!(h.eval(&dvector![2.0, -0.9]) > 0.0);

        // Horizontal segment [-1,1] x {0}, including a zero column to drop.
        let s = Zonotope::new(dvector![0.0, 0.0], dmatrix![1.0, 0.0; 0.0, 0.0]).unwrap();
        let h = to_halfspace(&s).unwrap();
        assert!(h.eval(&dvector![0.5, 0.0]) <= 0.0);
        assert!(h.eval(&dvector![1.0, 0.0]).abs() < 1e-12);
        assert!(h.eval(&dvector![1.5, 0.0]) > 0.0);
        assert!(h.eval(&dvector![0.0, 0.2]) > 0.0);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let z = Zonotope::point(dvector![0.0, 0.0, 0.0]);
        assert!(to_halfspace(&z).is_err());
    }

    /// Sign of the halfspace residual agrees with an independent geometric
    /// oracle (point-in-convex-polygon over the exact vertex list) away from
    /// a thin boundary band.
    #[test]
    fn sign_agreement_with_polygon_oracle() {
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..100 {
            let n_gen = rng.gen_range(2..6);
            let center = DVector::from_fn(2, |_, _| rng.gen_range(-2.0..2.0));
            let generators = DMatrix::from_fn(2, n_gen, |_, _| rng.gen_range(-1.5..1.5));
            let z = Zonotope::new(center, generators).unwrap();
            // Skip near-degenerate draws; the degenerate paths have their own test.
            let h = match to_halfspace(&z) {
                Ok(h) => h,
                Err(_) => continue,
            };
            let verts = z.vertices_2d();
            if verts.len() < 3 {
                continue;
            }
            for _ in 0..1000 {
                let p = dvector![rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
                let res = h.eval(&p);
                if res.abs() < 1e-7 {
                    continue; // boundary band
                }
                let inside = point_in_polygon(&verts, p[0], p[1]);
                assert_eq!(res < 0.0, inside, "residual {res} vs polygon {inside}");
            }
        }
    }

    fn point_in_polygon(verts: &[[f64; 2]], x: f64, y: f64) -> bool {
        let n = verts.len();
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            if (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]) < 0.0 {
                return false;
            }
        }
        true
    }
}

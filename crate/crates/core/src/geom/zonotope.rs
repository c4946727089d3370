//! Zonotopes: centrally symmetric convex sets `{ c + Σ_k β_k g_k, β_k ∈ [−1,1] }`
//! given by a center `c` and a generator matrix `G` whose columns are the `g_k`.
//!
//! This is the universal set representation of the crate: reachable sets,
//! obstacle occupancies, and collision constraints are all zonotopes or are
//! derived from them. Operations never mutate; they return new values.

use nalgebra::{DMatrix, DVector};

use super::interval::Interval;
use super::GeomError;

#[derive(Clone, Debug, PartialEq)]
pub struct Zonotope {
    /// Center point, dimension n.
    pub center: DVector<f64>,
    /// Generator matrix, n × ℓ. Columns are generators; ℓ = 0 is a point.
    pub generators: DMatrix<f64>,
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self, GeomError> {
        if center.len() != generators.nrows() {
            return Err(GeomError::DimensionMismatch {
                expected: center.len(),
                got: generators.nrows(),
            });
        }
        Ok(Zonotope { center, generators })
    }

    /// A single point as a zonotope with no generators.
    pub fn point(center: DVector<f64>) -> Self {
        let n = center.len();
        Zonotope {
            center,
            generators: DMatrix::zeros(n, 0),
        }
    }

    /// Axis-aligned box as a zonotope: center = midpoints, generators =
    /// diagonal of radii (one column per dimension, zero-width dimensions
    /// included so column indices track dimensions).
    pub fn from_box(box_: &[Interval]) -> Self {
        let n = box_.len();
        let center = DVector::from_iterator(n, box_.iter().map(|iv| iv.mid()));
        let mut generators = DMatrix::zeros(n, n);
        for (d, iv) in box_.iter().enumerate() {
            generators[(d, d)] = iv.rad();
        }
        Zonotope { center, generators }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    /// Minkowski sum: pointwise set addition.
    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope, GeomError> {
        if self.dim() != other.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let mut generators = DMatrix::zeros(self.dim(), self.num_generators() + other.num_generators());
        generators
            .columns_mut(0, self.num_generators())
            .copy_from(&self.generators);
        generators
            .columns_mut(self.num_generators(), other.num_generators())
            .copy_from(&other.generators);
        Ok(Zonotope {
            center: &self.center + &other.center,
            generators,
        })
    }

    /// Image under a linear map: ⟨A·c, A·G⟩.
    pub fn linear_map(&self, a: &DMatrix<f64>) -> Result<Zonotope, GeomError> {
        if a.ncols() != self.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim(),
                got: a.ncols(),
            });
        }
        Ok(Zonotope {
            center: a * &self.center,
            generators: a * &self.generators,
        })
    }

    /// Shift by a constant vector.
    pub fn translate(&self, v: &DVector<f64>) -> Result<Zonotope, GeomError> {
        if v.len() != self.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(Zonotope {
            center: &self.center + v,
            generators: self.generators.clone(),
        })
    }

    /// Tightest axis-aligned box containing the set:
    /// per dimension `[c_d − Σ_k |G_dk|, c_d + Σ_k |G_dk|]`.
    pub fn interval_hull(&self) -> Vec<Interval> {
        (0..self.dim())
            .map(|d| {
                let r: f64 = self.generators.row(d).iter().map(|g| g.abs()).sum();
                Interval::new(self.center[d] - r, self.center[d] + r)
            })
            .collect()
    }

    /// Hull of a single dimension (cheaper than the full hull).
    pub fn dim_interval(&self, d: usize) -> Interval {
        let r: f64 = self.generators.row(d).iter().map(|g| g.abs()).sum();
        Interval::new(self.center[d] - r, self.center[d] + r)
    }

    /// Projection onto a subset of dimensions (row selection, exact for zonotopes).
    pub fn project(&self, dims: &[usize]) -> Zonotope {
        let center = DVector::from_iterator(dims.len(), dims.iter().map(|&d| self.center[d]));
        let mut generators = DMatrix::zeros(dims.len(), self.num_generators());
        for (i, &d) in dims.iter().enumerate() {
            generators.row_mut(i).copy_from(&self.generators.row(d));
        }
        Zonotope { center, generators }
    }

    /// Appended-generator copy (extra columns on the right).
    pub fn append_generators(&self, extra: &DMatrix<f64>) -> Result<Zonotope, GeomError> {
        if extra.nrows() != self.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim(),
                got: extra.nrows(),
            });
        }
        let l = self.num_generators();
        let mut generators = DMatrix::zeros(self.dim(), l + extra.ncols());
        generators.columns_mut(0, l).copy_from(&self.generators);
        generators.columns_mut(l, extra.ncols()).copy_from(extra);
        Ok(Zonotope {
            center: self.center.clone(),
            generators,
        })
    }

    /// Copy with all exactly-zero generator columns removed.
    pub fn drop_zero_columns(&self) -> Zonotope {
        let keep: Vec<usize> = (0..self.num_generators())
            .filter(|&k| self.generators.column(k).iter().any(|&g| g != 0.0))
            .collect();
        let mut generators = DMatrix::zeros(self.dim(), keep.len());
        for (i, &k) in keep.iter().enumerate() {
            generators.column_mut(i).copy_from(&self.generators.column(k));
        }
        Zonotope {
            center: self.center.clone(),
            generators,
        }
    }

    /// Order reduction: if the set has more than `cap` generators, the
    /// smallest-norm columns at index ≥ `protected` are replaced by their
    /// axis-aligned box (per-dimension absolute sums). The first `protected`
    /// columns are never touched and keep their positions. Sound: the result
    /// contains the input.
    pub fn reduce(&self, cap: usize, protected: usize) -> Zonotope {
        let l = self.num_generators();
        let n = self.dim();
        if l <= cap {
            return self.clone();
        }
        assert!(
            protected <= l && protected + n <= cap + n,
            "reduction cap {cap} too small for {protected} protected columns"
        );
        // Remove enough columns that survivors + box columns fit the cap.
        let m = (l + n).saturating_sub(cap).min(l - protected);
        let mut order: Vec<usize> = (protected..l).collect();
        order.sort_by(|&a, &b| {
            let na = self.generators.column(a).norm();
            let nb = self.generators.column(b).norm();
            na.partial_cmp(&nb).unwrap().then(a.cmp(&b))
        });
        let removed: Vec<usize> = order[..m].to_vec();
        let removed_set: std::collections::HashSet<usize> = removed.iter().cloned().collect();

        let mut box_radii = vec![0.0f64; n];
        for &k in &removed {
            for d in 0..n {
                box_radii[d] += self.generators[(d, k)].abs();
            }
        }
        let kept: Vec<usize> = (0..l).filter(|k| !removed_set.contains(k)).collect();
        let box_dims: Vec<usize> = (0..n).filter(|&d| box_radii[d] > 0.0).collect();
        let mut generators = DMatrix::zeros(n, kept.len() + box_dims.len());
        for (i, &k) in kept.iter().enumerate() {
            generators.column_mut(i).copy_from(&self.generators.column(k));
        }
        for (j, &d) in box_dims.iter().enumerate() {
            generators[(d, kept.len() + j)] = box_radii[d];
        }
        Zonotope {
            center: self.center.clone(),
            generators,
        }
    }

    /// Exact membership test via a small linear program: minimize the
    /// ∞-norm of coefficients β subject to G·β = x − c; the point is inside
    /// iff the optimum is ≤ 1 (+`tol`). Dimensions whose generator row is
    /// entirely zero are checked directly against the center.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.membership_margin(x, tol).map_or(false, |t| t <= 1.0 + tol)
    }

    /// The optimal ∞-norm of membership coefficients, or `None` when the
    /// point is off the generators' affine span (definitely outside).
    pub fn membership_margin(&self, x: &DVector<f64>, tol: f64) -> Option<f64> {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        let d = x - &self.center;
        let z = self.drop_zero_columns();
        let l = z.num_generators();

        // Rows with no generator support constrain the point directly.
        let mut live_rows = Vec::new();
        for row in 0..z.dim() {
            if z.generators.row(row).iter().all(|&g| g == 0.0) {
                if d[row].abs() > tol {
                    return None;
                }
            } else {
                live_rows.push(row);
            }
        }
        if l == 0 {
            return Some(0.0);
        }

        use minilp::{ComparisonOp, OptimizationDirection, Problem};
        let mut pb = Problem::new(OptimizationDirection::Minimize);
        let t = pb.add_var(1.0, (0.0, f64::INFINITY));
        let betas: Vec<_> = (0..l)
            .map(|_| pb.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
            .collect();
        for &row in &live_rows {
            let terms: Vec<_> = (0..l)
                .map(|k| (betas[k], z.generators[(row, k)]))
                .collect();
            pb.add_constraint(&terms, ComparisonOp::Eq, d[row]);
        }
        for &beta in &betas {
            pb.add_constraint(&[(beta, 1.0), (t, -1.0)], ComparisonOp::Le, 0.0);
            pb.add_constraint(&[(beta, -1.0), (t, -1.0)], ComparisonOp::Le, 0.0);
        }
        pb.solve().ok().map(|sol| sol[t])
    }

    /// Vertices of a 2-D zonotope in counterclockwise order. Degenerate
    /// (point/segment) inputs return 1 or 2 vertices.
    pub fn vertices_2d(&self) -> Vec<[f64; 2]> {
        assert_eq!(self.dim(), 2, "vertex walk is 2-D only");
        let z = self.drop_zero_columns();
        let l = z.num_generators();
        if l == 0 {
            return vec![[z.center[0], z.center[1]]];
        }
        // Normalize generators into the upper half plane and sort by angle.
        let mut gens: Vec<[f64; 2]> = (0..l)
            .map(|k| {
                let g = [z.generators[(0, k)], z.generators[(1, k)]];
                if g[1] < 0.0 || (g[1] == 0.0 && g[0] < 0.0) {
                    [-g[0], -g[1]]
                } else {
                    g
                }
            })
            .collect();
        gens.sort_by(|a, b| {
            let ta = a[1].atan2(a[0]);
            let tb = b[1].atan2(b[0]);
            ta.partial_cmp(&tb).unwrap()
        });
        // Start at the vertex with every coefficient −1, then walk the
        // boundary flipping one generator at a time; mirror for the rest.
        let mut x = z.center[0];
        let mut y = z.center[1];
        for g in &gens {
            x -= g[0];
            y -= g[1];
        }
        let mut upper = vec![[x, y]];
        for g in &gens {
            x += 2.0 * g[0];
            y += 2.0 * g[1];
            upper.push([x, y]);
        }
        // Mirror the open part of the walk through the center.
        let mut verts = upper.clone();
        for v in upper.iter().skip(1).take(gens.len().saturating_sub(1)) {
            verts.push([2.0 * z.center[0] - v[0], 2.0 * z.center[1] - v[1]]);
        }
        verts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use rand::prelude::*;

    fn sample_member(z: &Zonotope, rng: &mut StdRng) -> DVector<f64> {
        let mut x = z.center.clone();
        for k in 0..z.num_generators() {
            let beta: f64 = rng.gen_range(-1.0..=1.0);
            x += beta * z.generators.column(k);
        }
        x
    }

    #[test]
    fn minkowski_sum_definition() {
        let z1 = Zonotope::new(dvector![1.0, 0.0], dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        let z2 = Zonotope::new(dvector![-1.0, 2.0], dmatrix![0.5; 0.0]).unwrap();
        let s = z1.minkowski_sum(&z2).unwrap();
        assert_eq!(s.center, dvector![0.0, 2.0]);
        assert_eq!(s.generators, dmatrix![1.0, 0.0, 0.5; 0.0, 1.0, 0.0]);
    }

    #[test]
    fn minkowski_sum_identity_element() {
        let z = Zonotope::new(dvector![1.0, 2.0], dmatrix![1.0, 0.5; 0.0, 1.0]).unwrap();
        let zero = Zonotope::point(dvector![0.0, 0.0]);
        let s = z.minkowski_sum(&zero).unwrap();
        assert_eq!(s.center, z.center);
        assert_eq!(s.generators, z.generators);
    }

    #[test]
    fn minkowski_sum_dimension_mismatch() {
        let z1 = Zonotope::point(dvector![0.0, 0.0]);
        let z2 = Zonotope::point(dvector![0.0, 0.0, 0.0]);
        assert!(z1.minkowski_sum(&z2).is_err());
    }

    /// Sampled members of the operands sum to members of the Minkowski sum.
    #[test]
    fn minkowski_sum_membership_oracle() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let z1 = random_zonotope(&mut rng, 3, 4);
            let z2 = random_zonotope(&mut rng, 3, 2);
            let s = z1.minkowski_sum(&z2).unwrap();
            for _ in 0..50 {
                let x = sample_member(&z1, &mut rng) + sample_member(&z2, &mut rng);
                assert!(s.contains(&x, 1e-9));
            }
        }
    }

    fn random_zonotope(rng: &mut StdRng, n: usize, l: usize) -> Zonotope {
        let center = DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
        let generators = DMatrix::from_fn(n, l, |_, _| rng.gen_range(-2.0..2.0));
        Zonotope::new(center, generators).unwrap()
    }

    #[test]
    fn linear_map_identity_and_rotation() {
        let z = Zonotope::new(dvector![0.0, 0.0], dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        let id = DMatrix::identity(2, 2);
        assert_eq!(z.linear_map(&id).unwrap(), z);

        let rot = dmatrix![0.0, -1.0; 1.0, 0.0]; // 90 degrees
        let r = z.linear_map(&rot).unwrap();
        assert_eq!(r.center, dvector![0.0, 0.0]);
        assert_eq!(r.generators, dmatrix![0.0, -1.0; 1.0, 0.0]);
    }

    #[test]
    fn linear_map_membership_oracle() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..20 {
            let z = random_zonotope(&mut rng, 3, 5);
            let a = DMatrix::from_fn(2, 3, |_, _| rng.gen_range(-1.5..1.5));
            let img = z.linear_map(&a).unwrap();
            for _ in 0..50 {
                let x = sample_member(&z, &mut rng);
                assert!(img.contains(&(&a * x), 1e-9));
            }
        }
    }

    #[test]
    fn interval_hull_examples() {
        let z = Zonotope::new(dvector![0.0], dmatrix![1.0, -2.0]).unwrap();
        let h = z.interval_hull();
        assert_eq!(h[0], crate::geom::Interval::new(-3.0, 3.0));

        let p = Zonotope::point(dvector![2.5, -1.0]);
        let h = p.interval_hull();
        assert_eq!(h[0], crate::geom::Interval::point(2.5));
        assert_eq!(h[1], crate::geom::Interval::point(-1.0));
    }

    #[test]
    fn interval_hull_contains_samples() {
        let mut rng = StdRng::seed_from_u64(17);
        let z = random_zonotope(&mut rng, 4, 7);
        let h = z.interval_hull();
        for _ in 0..1000 {
            let x = sample_member(&z, &mut rng);
            for d in 0..4 {
                assert!(h[d].contains(x[d]));
            }
        }
    }

    #[test]
    fn box_round_trip_is_bit_exact() {
        use crate::geom::Interval;
        let b = vec![
            Interval::new(-1.25, 3.5),
            Interval::new(0.1, 0.1),
            Interval::new(-7.0, -2.0),
        ];
        let z = Zonotope::from_box(&b);
        let h = z.interval_hull();
        for d in 0..3 {
            assert_eq!(h[d].lo, b[d].lo);
            assert_eq!(h[d].hi, b[d].hi);
        }
    }

    #[test]
    fn membership_margin_boundary() {
        let z = Zonotope::new(dvector![0.0, 0.0], dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        assert!(z.contains(&dvector![1.0, 1.0], 1e-9)); // corner
        assert!(!z.contains(&dvector![1.0 + 1e-6, 0.0], 1e-9));
        assert!(z.contains(&dvector![0.3, -0.7], 1e-9));
        let m = z.membership_margin(&dvector![0.5, 0.0], 1e-9).unwrap();
        assert!((m - 0.5).abs() < 1e-9);
    }

    #[test]
    fn membership_off_span_rejected() {
        // Segment along x in 2-D: points off the x-axis are outside.
        let z = Zonotope::new(dvector![0.0, 0.0], dmatrix![1.0; 0.0]).unwrap();
        assert!(z.contains(&dvector![0.5, 0.0], 1e-9));
        assert!(!z.contains(&dvector![0.5, 0.1], 1e-9));
    }

    #[test]
    fn projection_and_translation() {
        let z = Zonotope::new(dvector![1.0, 2.0, 3.0], dmatrix![1.0, 0.0; 0.0, 2.0; 1.0, 1.0]).unwrap();
        let p = z.project(&[0, 2]);
        assert_eq!(p.center, dvector![1.0, 3.0]);
        assert_eq!(p.generators, dmatrix![1.0, 0.0; 1.0, 1.0]);
        let t = z.translate(&dvector![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.center, dvector![2.0, 3.0, 4.0]);
    }

    #[test]
    fn reduction_is_sound_and_respects_protection() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..10 {
            let z = random_zonotope(&mut rng, 3, 12);
            let r = z.reduce(8, 2);
            assert!(r.num_generators() <= 8 + 3); // cap + box slack by construction
            // Protected columns are untouched and in place.
            for k in 0..2 {
                assert_eq!(r.generators.column(k), z.generators.column(k));
            }
            // Soundness: samples of the original stay inside the reduced set.
            for _ in 0..100 {
                let x = sample_member(&z, &mut rng);
                assert!(r.contains(&x, 1e-9));
            }
        }
    }

    #[test]
    fn reduction_noop_below_cap() {
        let mut rng = StdRng::seed_from_u64(29);
        let z = random_zonotope(&mut rng, 3, 5);
        let r = z.reduce(10, 0);
        assert_eq!(r, z);
    }

    #[test]
    fn vertices_2d_square() {
        let z = Zonotope::new(dvector![1.0, 1.0], dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        let v = z.vertices_2d();
        assert_eq!(v.len(), 4);
        // All four corners present.
        for corner in [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]] {
            assert!(
                v.iter()
                    .any(|p| (p[0] - corner[0]).abs() < 1e-12 && (p[1] - corner[1]).abs() < 1e-12),
                "missing corner {corner:?} in {v:?}"
            );
        }
    }

    #[test]
    fn vertices_2d_cover_samples() {
        // Every sampled member lies inside the vertex polygon (point-in-polygon).
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..10 {
            let z = random_zonotope(&mut rng, 2, 5);
            let verts = z.vertices_2d();
            for _ in 0..200 {
                let x = sample_member(&z, &mut rng);
                assert!(point_in_polygon(&verts, x[0], x[1], 1e-7));
            }
        }
    }

    fn point_in_polygon(verts: &[[f64; 2]], x: f64, y: f64, tol: f64) -> bool {
        // Convex polygon in CCW order: inside iff left of every edge.
        let n = verts.len();
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
            if cross < -tol * ((b[0] - a[0]).hypot(b[1] - a[1]) + 1.0) {
                return false;
            }
        }
        true
    }
}

//! Set-based computation kernels: intervals, zonotopes, and 2-D halfspace
//! conversion. Everything downstream (reachability, collision constraints,
//! verification oracles) builds on these types.

mod halfspace;
mod interval;
mod zonotope;

pub use halfspace::{to_halfspace, HalfspaceRep};
pub use interval::{Interval, Real};
pub use zonotope::Zonotope;

/// Errors from geometric constructors and conversions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeomError {
    /// Operand dimensions are incompatible.
    DimensionMismatch { expected: usize, got: usize },
    /// An operation that only exists in the plane received another dimension.
    NotTwoDimensional { got: usize },
}

impl std::fmt::Display for GeomError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeomError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            GeomError::NotTwoDimensional { got } => {
                write!(f, "operation requires dimension 2, got {got}")
            }
        }
    }
}

impl std::error::Error for GeomError {}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn zonotope_strategy(n: usize, max_gens: usize) -> impl Strategy<Value = Zonotope> {
        (1..=max_gens).prop_flat_map(move |l| {
            (
                proptest::collection::vec(-5.0..5.0f64, n),
                proptest::collection::vec(-2.0..2.0f64, n * l),
            )
                .prop_map(move |(c, g)| {
                    Zonotope::new(
                        DVector::from_vec(c),
                        DMatrix::from_vec(n, l, g),
                    )
                    .unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Interval evaluation of x·(1−x) over subintervals of [0,1] always
        /// contains the exact image (conservative containment), and interval
        /// operations are inclusion monotone on nested inputs.
        #[test]
        fn interval_inclusion_monotone(a in 0.0..0.5f64, w in 0.0..0.5f64, shrink in 0.0..1.0f64) {
            let outer = Interval::new(a, a + w);
            let inner_lo = a + shrink * w * 0.25;
            let inner = Interval::new(inner_lo, inner_lo + w * 0.5 * (1.0 - shrink * 0.5));
            let f = |x: Interval| x * (Interval::point(1.0) - x);
            let fo = f(outer);
            let fi = f(inner);
            prop_assert!(fo.lo <= fi.lo + 1e-12 && fi.hi <= fo.hi + 1e-12);
            // Dense sampling: true range inside interval result.
            for k in 0..=32 {
                let x = outer.lo + outer.width() * (k as f64) / 32.0;
                prop_assert!(fo.inflate(1e-12).contains(x * (1.0 - x)));
            }
        }

        /// Hull commutes with Minkowski sum on random pairs: the hull of the
        /// sum equals the per-dimension sum of hulls.
        #[test]
        fn hull_of_sum_is_sum_of_hulls(z1 in zonotope_strategy(3, 4), z2 in zonotope_strategy(3, 3)) {
            let s = z1.minkowski_sum(&z2).unwrap();
            let hs = s.interval_hull();
            let h1 = z1.interval_hull();
            let h2 = z2.interval_hull();
            for d in 0..3 {
                prop_assert!((hs[d].lo - (h1[d].lo + h2[d].lo)).abs() < 1e-12);
                prop_assert!((hs[d].hi - (h1[d].hi + h2[d].hi)).abs() < 1e-12);
            }
        }

        /// Projection of the hull equals hull of the projection.
        #[test]
        fn projection_consistent_with_hull(z in zonotope_strategy(4, 5)) {
            let p = z.project(&[1, 3]);
            let hp = p.interval_hull();
            let h = z.interval_hull();
            prop_assert_eq!(hp[0], h[1]);
            prop_assert_eq!(hp[1], h[3]);
        }
    }
}

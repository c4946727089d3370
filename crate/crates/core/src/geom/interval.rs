//! Closed-interval arithmetic on `f64`.
//!
//! Values are plain `[lo, hi]` pairs with outward semantics left to the
//! caller: every operation returns an interval that contains the exact
//! image of its operands, evaluated in ordinary floating point.  This is
//! the workhorse behind remainder bounds in the reachability engine and
//! behind range evaluation of reference trajectories, where statistical
//! validation (not directed rounding) is the soundness story.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Interval from explicit bounds. Panics if `lo > hi` or either bound is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    /// Degenerate interval `[x, x]`.
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Symmetric interval `[-r, r]`, `r >= 0`.
    pub fn symmetric(r: f64) -> Self {
        assert!(r >= 0.0, "negative radius {r}");
        Interval { lo: -r, hi: r }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn rad(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Smallest interval containing both operands.
    pub fn hull(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Exact range of `min(x, y)` for x, y ranging over the two intervals
    /// (min is monotone in both arguments).
    pub fn min_with(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    /// Intersection, or `None` when disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }

    /// Grow both ends outward by `eps >= 0`.
    pub fn inflate(&self, eps: f64) -> Interval {
        Interval {
            lo: self.lo - eps,
            hi: self.hi + eps,
        }
    }

    /// Clip the lower bound up to `min` (upper bound clipped too if needed).
    pub fn clamp_lo(&self, min: f64) -> Interval {
        Interval {
            lo: self.lo.max(min),
            hi: self.hi.max(min),
        }
    }

    /// Clip the upper bound down to `max` (lower bound clipped too if needed).
    pub fn clamp_hi(&self, max: f64) -> Interval {
        Interval {
            lo: self.lo.min(max),
            hi: self.hi.min(max),
        }
    }

    /// Range of `x^2` over the interval.
    pub fn sqr(&self) -> Interval {
        let a = self.lo * self.lo;
        let b = self.hi * self.hi;
        if self.contains(0.0) {
            Interval {
                lo: 0.0,
                hi: a.max(b),
            }
        } else {
            Interval {
                lo: a.min(b),
                hi: a.max(b),
            }
        }
    }

    /// Range of `|x|` over the interval.
    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Interval {
                lo: 0.0,
                hi: self.hi.max(-self.lo),
            }
        }
    }

    /// Range of `exp(x)` (monotone).
    pub fn exp(&self) -> Interval {
        Interval {
            lo: self.lo.exp(),
            hi: self.hi.exp(),
        }
    }

    /// Range of `1/x`. Panics if the interval contains zero.
    pub fn recip(&self) -> Interval {
        assert!(
            !self.contains(0.0),
            "reciprocal of interval containing zero: [{}, {}]",
            self.lo,
            self.hi
        );
        Interval {
            lo: 1.0 / self.hi,
            hi: 1.0 / self.lo,
        }
    }

    /// Exact range of `sin(x)` over the interval.
    pub fn sin(&self) -> Interval {
        // sin attains +1 at pi/2 + 2k*pi and -1 at -pi/2 + 2k*pi.
        if self.width() >= 2.0 * std::f64::consts::PI {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        let slo = self.lo.sin();
        let shi = self.hi.sin();
        let mut lo = slo.min(shi);
        let mut hi = slo.max(shi);
        if contains_angle(self, std::f64::consts::FRAC_PI_2) {
            hi = 1.0;
        }
        if contains_angle(self, -std::f64::consts::FRAC_PI_2) {
            lo = -1.0;
        }
        Interval { lo, hi }
    }

    /// Exact range of `cos(x)` over the interval.
    pub fn cos(&self) -> Interval {
        if self.width() >= 2.0 * std::f64::consts::PI {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        let clo = self.lo.cos();
        let chi = self.hi.cos();
        let mut lo = clo.min(chi);
        let mut hi = clo.max(chi);
        if contains_angle(self, 0.0) {
            hi = 1.0;
        }
        if contains_angle(self, std::f64::consts::PI) {
            lo = -1.0;
        }
        Interval { lo, hi }
    }
}

/// Does `iv` contain an angle congruent to `theta` modulo 2*pi?
fn contains_angle(iv: &Interval, theta: f64) -> bool {
    let two_pi = 2.0 * std::f64::consts::PI;
    // First representative >= iv.lo.
    let k = ((iv.lo - theta) / two_pi).ceil();
    theta + k * two_pi <= iv.hi
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo - rhs.hi,
            hi: self.hi - rhs.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let c = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        Interval {
            lo: c.iter().cloned().fold(f64::INFINITY, f64::min),
            hi: c.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        self * rhs.recip()
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        Interval {
            lo: self.lo + rhs,
            hi: self.hi + rhs,
        }
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, rhs: f64) -> Interval {
        Interval {
            lo: self.lo - rhs,
            hi: self.hi - rhs,
        }
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        if rhs >= 0.0 {
            Interval {
                lo: self.lo * rhs,
                hi: self.hi * rhs,
            }
        } else {
            Interval {
                lo: self.hi * rhs,
                hi: self.lo * rhs,
            }
        }
    }
}

impl Mul<Interval> for f64 {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        rhs * self
    }
}

impl Add<Interval> for f64 {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        rhs + self
    }
}

impl Sub<Interval> for f64 {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        -rhs + self
    }
}

/// Scalar abstraction shared by pointwise (`f64`) and set-valued (`Interval`)
/// evaluation, so model right-hand sides can be written once and used both
/// for simulation/linearization and for conservative range enclosure.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn constant(x: f64) -> Self;
    /// `k * self` for a plain scalar coefficient.
    fn scale(self, k: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqr(self) -> Self;
    /// `1/self`; the argument must exclude zero.
    fn recip(self) -> Self;
    fn min_with(self, other: Self) -> Self;
}

impl Real for f64 {
    fn constant(x: f64) -> f64 {
        x
    }
    fn scale(self, k: f64) -> f64 {
        k * self
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
    fn sqr(self) -> f64 {
        self * self
    }
    fn recip(self) -> f64 {
        1.0 / self
    }
    fn min_with(self, other: f64) -> f64 {
        self.min(other)
    }
}

impl Real for Interval {
    fn constant(x: f64) -> Interval {
        Interval::point(x)
    }
    fn scale(self, k: f64) -> Interval {
        self * k
    }
    fn sin(self) -> Interval {
        Interval::sin(&self)
    }
    fn cos(self) -> Interval {
        Interval::cos(&self)
    }
    fn sqr(self) -> Interval {
        Interval::sqr(&self)
    }
    fn recip(self) -> Interval {
        Interval::recip(&self)
    }
    fn min_with(self, other: Interval) -> Interval {
        Interval::min_with(self, other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    #[test]
    fn construction_and_accessors() {
        let iv = Interval::new(-1.0, 3.0);
        assert_eq!(iv.mid(), 1.0);
        assert_eq!(iv.rad(), 2.0);
        assert_eq!(iv.width(), 4.0);
        assert!(iv.contains(0.0));
        assert!(!iv.contains(3.1));
    }

    #[test]
    #[should_panic]
    fn inverted_bounds_rejected() {
        let _ = Interval::new(1.0, 0.0);
    }

    #[test]
    fn arithmetic_basics() {
        let a = Interval::new(-1.0, 2.0);
        let b = Interval::new(3.0, 4.0);
        assert_eq!(a + b, Interval::new(2.0, 6.0));
        assert_eq!(a - b, Interval::new(-5.0, -1.0));
        assert_eq!(a * b, Interval::new(-4.0, 8.0));
        assert_eq!(b.recip(), Interval::new(0.25, 1.0 / 3.0));
    }

    #[test]
    fn sqr_straddling_zero() {
        let a = Interval::new(-2.0, 1.0);
        assert_eq!(a.sqr(), Interval::new(0.0, 4.0));
        let b = Interval::new(1.0, 3.0);
        assert_eq!(b.sqr(), Interval::new(1.0, 9.0));
    }

    /// Every sampled value of f(x) for x in the interval must land inside
    /// the computed range. Checks the transcendental ranges against dense
    /// sampling over many random intervals.
    #[test]
    fn ranges_enclose_dense_samples() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let a = rng.gen_range(-10.0..10.0);
            let w = rng.gen_range(0.0..8.0);
            let iv = Interval::new(a, a + w);
            let sin_r = iv.sin();
            let cos_r = iv.cos();
            let sqr_r = iv.sqr();
            let abs_r = iv.abs();
            let exp_r = iv.exp();
            for k in 0..=64 {
                let x = iv.lo + iv.width() * (k as f64) / 64.0;
                let pad = 1e-12;
                assert!(sin_r.inflate(pad).contains(x.sin()), "sin {x} {sin_r:?}");
                assert!(cos_r.inflate(pad).contains(x.cos()), "cos {x} {cos_r:?}");
                assert!(sqr_r.inflate(pad).contains(x * x));
                assert!(abs_r.inflate(pad).contains(x.abs()));
                assert!(exp_r.inflate(pad * exp_r.hi).contains(x.exp()));
            }
        }
    }

    #[test]
    fn trig_hits_extrema() {
        // Interval spanning pi/2 must reach sin = 1.
        let iv = Interval::new(1.0, 2.0);
        assert_eq!(iv.sin().hi, 1.0);
        // Interval spanning pi must reach cos = -1.
        let iv = Interval::new(3.0, 3.3);
        assert_eq!(iv.cos().lo, -1.0);
        // Far-shifted copies behave the same.
        let two_pi = 2.0 * std::f64::consts::PI;
        let iv = Interval::new(1.0 + 5.0 * two_pi, 2.0 + 5.0 * two_pi);
        assert!((iv.sin().hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_mul_scalar_sign() {
        let a = Interval::new(-1.0, 2.0);
        assert_eq!(a * -2.0, Interval::new(-4.0, 2.0));
        assert_eq!(-3.0 * a, Interval::new(-6.0, 3.0));
    }

    #[test]
    fn hull_and_intersect() {
        let a = Interval::new(0.0, 1.0);
        let b = Interval::new(0.5, 2.0);
        assert_eq!(a.hull(b), Interval::new(0.0, 2.0));
        assert_eq!(a.intersect(&b).unwrap(), Interval::new(0.5, 1.0));
        let c = Interval::new(3.0, 4.0);
        assert!(a.intersect(&c).is_none());
    }
}

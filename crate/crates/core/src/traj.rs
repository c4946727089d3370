//! The three parameterized desired-trajectory families: speed change,
//! direction change, and lane change.
//!
//! Every desired trajectory is a driving phase on [0, t_nb) followed by a
//! contingency braking phase that provably brings the vehicle to a stop. The
//! scalar evaluators drive the controller and simulator; the interval twins
//! feed the reachability engine exact ranges over boxes of (t, u0, p).

use crate::config::TrajConfig;
use crate::geom::Interval;

/// The three maneuver families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    SpeedChange,
    DirectionChange,
    LaneChange,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::SpeedChange, Family::DirectionChange, Family::LaneChange];

    /// Stable numeric tag for serialization.
    pub fn code(self) -> u8 {
        match self {
            Family::SpeedChange => 0,
            Family::DirectionChange => 1,
            Family::LaneChange => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Family> {
        match code {
            0 => Some(Family::SpeedChange),
            1 => Some(Family::DirectionChange),
            2 => Some(Family::LaneChange),
            _ => None,
        }
    }
}

/// Decision variable selecting one trajectory within a family: target speed
/// p_u and lateral/heading parameter p_y. Families with p_y ≠ 0 require
/// p_u = u0 (the vehicle holds its speed while turning).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajParam {
    pub family: Family,
    pub p_u: f64,
    pub p_y: f64,
}

/// Family constants bound to one maneuver family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyShape {
    pub family: Family,
    /// Driving-phase duration [s].
    pub t_nb: f64,
    /// Braking deceleration (< 0) [m/s²].
    pub a_max: f64,
    /// Heading pulse shape constants (lane change only).
    pub h1: f64,
    pub h2: f64,
    /// Speed threshold where the braking ramp hands over to the low-speed stop.
    pub u_crit: f64,
}

impl FamilyShape {
    pub fn from_config(family: Family, cfg: &TrajConfig, u_crit: f64) -> FamilyShape {
        let t_nb = match family {
            Family::SpeedChange => cfg.t_nb_speed,
            Family::DirectionChange => cfg.t_nb_dir,
            Family::LaneChange => cfg.t_nb_lane,
        };
        FamilyShape {
            family,
            t_nb,
            a_max: cfg.a_max,
            h1: cfg.h1,
            h2: cfg.h2,
            u_crit,
        }
    }

    /// Time at which the desired speed reaches zero: the braking ramp needs
    /// (u_crit − p_u)/a_max seconds to fall from p_u to u_crit, after which
    /// the desired speed snaps to zero.
    pub fn t_stop(&self, p_u: f64) -> f64 {
        if p_u > self.u_crit {
            self.t_nb + (self.u_crit - p_u) / self.a_max
        } else {
            self.t_nb
        }
    }

    /// Desired longitudinal speed at time t for a maneuver starting at speed u0.
    pub fn u_des(&self, t: f64, u0: f64, p_u: f64) -> f64 {
        if t < self.t_nb {
            u0 + (p_u - u0) * t / self.t_nb
        } else if p_u > self.u_crit && t < self.t_stop(p_u) {
            p_u + self.a_max * (t - self.t_nb)
        } else {
            0.0
        }
    }

    /// Time derivative of the desired speed (piecewise slope; at a boundary,
    /// the slope of the piece starting there).
    pub fn du_des(&self, t: f64, u0: f64, p_u: f64) -> f64 {
        if t < self.t_nb {
            (p_u - u0) / self.t_nb
        } else if p_u > self.u_crit && t < self.t_stop(p_u) {
            self.a_max
        } else {
            0.0
        }
    }

    /// Desired heading relative to the maneuver-start heading h0.
    pub fn h_des(&self, t: f64, p_y: f64) -> f64 {
        match self.family {
            Family::SpeedChange => 0.0,
            Family::DirectionChange => {
                if t < self.t_nb {
                    0.5 * p_y * t
                        - (p_y * self.t_nb / (4.0 * std::f64::consts::PI))
                            * (2.0 * std::f64::consts::PI * t / self.t_nb).sin()
                } else {
                    0.5 * p_y * self.t_nb
                }
            }
            Family::LaneChange => {
                if t < self.t_nb {
                    let s = t - 0.5 * self.t_nb;
                    self.h1 * p_y * (-self.h2 * s * s).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Desired yaw rate: the time derivative of `h_des` on smooth pieces.
    pub fn r_des(&self, t: f64, p_y: f64) -> f64 {
        match self.family {
            Family::SpeedChange => 0.0,
            Family::DirectionChange => {
                if t < self.t_nb {
                    0.5 * p_y * (1.0 - (2.0 * std::f64::consts::PI * t / self.t_nb).cos())
                } else {
                    0.0
                }
            }
            Family::LaneChange => {
                if t < self.t_nb {
                    let s = t - 0.5 * self.t_nb;
                    -2.0 * self.h2 * s * self.h1 * p_y * (-self.h2 * s * s).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Time derivative of the desired yaw rate (controller feedforward).
    pub fn dr_des(&self, t: f64, p_y: f64) -> f64 {
        match self.family {
            Family::SpeedChange => 0.0,
            Family::DirectionChange => {
                if t < self.t_nb {
                    let w = 2.0 * std::f64::consts::PI / self.t_nb;
                    0.5 * p_y * w * (w * t).sin()
                } else {
                    0.0
                }
            }
            Family::LaneChange => {
                if t < self.t_nb {
                    let s = t - 0.5 * self.t_nb;
                    let g = (-self.h2 * s * s).exp();
                    -2.0 * self.h2 * self.h1 * p_y * g * (1.0 - 2.0 * self.h2 * s * s)
                } else {
                    0.0
                }
            }
        }
    }

    /// Heading the maneuver settles at (relative to h0) for t ≥ t_nb.
    pub fn h_final(&self, p_y: f64) -> f64 {
        match self.family {
            Family::SpeedChange | Family::LaneChange => 0.0,
            Family::DirectionChange => 0.5 * p_y * self.t_nb,
        }
    }

    // ----- interval twins ---------------------------------------------------
    //
    // Each returns the exact range of the scalar function over a box of
    // arguments (up to roundoff), by splitting at piece boundaries and using
    // monotonicity or explicit critical points inside each piece.

    /// Range of `u_des` over t ∈ `t`, u0 ∈ `u0`, p_u ∈ `p_u`.
    pub fn u_des_range(&self, t: Interval, u0: Interval, p_u: Interval) -> Interval {
        let mut out: Option<Interval> = None;
        let mut push = |iv: Interval| {
            out = Some(match out {
                Some(acc) => acc.hull(iv),
                None => iv,
            })
        };
        if t.lo < self.t_nb {
            // Driving ramp u0 + (p_u − u0)·s with s = t/t_nb ∈ [0,1]:
            // linear in s with interval-valued endpoints, so the lower
            // envelope is linear between u0.lo and p_u.lo (and likewise the
            // upper), making endpoint evaluation exact.
            let s_lo = (t.lo / self.t_nb).min(1.0);
            let s_hi = (t.hi / self.t_nb).min(1.0);
            let lo_at = |s: f64| u0.lo + (p_u.lo - u0.lo) * s;
            let hi_at = |s: f64| u0.hi + (p_u.hi - u0.hi) * s;
            push(Interval::new(
                lo_at(s_lo).min(lo_at(s_hi)),
                hi_at(s_lo).max(hi_at(s_hi)),
            ));
        }
        if t.hi >= self.t_nb {
            push(self.brake_value_range(Interval::new(t.lo.max(self.t_nb), t.hi), p_u));
        }
        out.expect("nonempty time interval")
    }

    /// Range of the braking-phase desired speed over tb ⊆ [t_nb, ∞).
    fn brake_value_range(&self, tb: Interval, p_u: Interval) -> Interval {
        // Ramp value if still braking; elements whose ramp has already hit
        // u_crit (or whose p_u never exceeded it) contribute exactly 0.
        let ramp = p_u + (tb - self.t_nb) * self.a_max;
        if p_u.lo > self.u_crit && ramp.lo > self.u_crit {
            ramp
        } else if p_u.hi > self.u_crit && ramp.hi > self.u_crit {
            Interval::new(0.0, ramp.hi)
        } else {
            Interval::point(0.0)
        }
    }

    /// Range of `du_des` over the argument box.
    pub fn du_des_range(&self, t: Interval, u0: Interval, p_u: Interval) -> Interval {
        let mut out: Option<Interval> = None;
        let mut push = |iv: Interval| {
            out = Some(match out {
                Some(acc) => acc.hull(iv),
                None => iv,
            })
        };
        if t.lo < self.t_nb {
            push((p_u - u0) * (1.0 / self.t_nb));
        }
        if t.hi >= self.t_nb {
            let tb = Interval::new(t.lo.max(self.t_nb), t.hi);
            let ramp = p_u + (tb - self.t_nb) * self.a_max;
            if p_u.lo > self.u_crit && ramp.lo > self.u_crit {
                push(Interval::point(self.a_max));
            } else if p_u.hi > self.u_crit && ramp.hi > self.u_crit {
                push(Interval::new(self.a_max, 0.0));
            } else {
                push(Interval::point(0.0));
            }
        }
        out.expect("nonempty time interval")
    }

    /// Range of `h_des` over t ∈ `t`, p_y ∈ `p_y`.
    pub fn h_des_range(&self, t: Interval, p_y: Interval) -> Interval {
        match self.family {
            Family::SpeedChange => Interval::point(0.0),
            Family::DirectionChange => {
                let mut out: Option<Interval> = None;
                if t.lo < self.t_nb {
                    // φ(t) = t/2 − (t_nb/4π)sin(2πt/t_nb) is nondecreasing
                    // (φ' = (1−cos)/2 ≥ 0), so its range is endpoint-valued.
                    let phi = |tt: f64| {
                        0.5 * tt
                            - (self.t_nb / (4.0 * std::f64::consts::PI))
                                * (2.0 * std::f64::consts::PI * tt / self.t_nb).sin()
                    };
                    let phi_iv = Interval::new(phi(t.lo), phi(t.hi.min(self.t_nb)));
                    out = Some(phi_iv * p_y);
                }
                if t.hi >= self.t_nb {
                    let tail = p_y * (0.5 * self.t_nb);
                    out = Some(match out {
                        Some(acc) => acc.hull(tail),
                        None => tail,
                    });
                }
                out.expect("nonempty time interval")
            }
            Family::LaneChange => {
                let mut out: Option<Interval> = None;
                if t.lo < self.t_nb {
                    // G(s) = e^{−h2 s²} peaks at s = 0 and is monotone on
                    // either side of it.
                    let g = |s: f64| (-self.h2 * s * s).exp();
                    let s = Interval::new(t.lo - 0.5 * self.t_nb, t.hi.min(self.t_nb) - 0.5 * self.t_nb);
                    let g_lo = g(s.lo).min(g(s.hi));
                    let mut g_hi = g(s.lo).max(g(s.hi));
                    if s.contains(0.0) {
                        g_hi = 1.0;
                    }
                    out = Some(Interval::new(g_lo, g_hi) * p_y * self.h1);
                }
                if t.hi >= self.t_nb {
                    let tail = Interval::point(0.0);
                    out = Some(match out {
                        Some(acc) => acc.hull(tail),
                        None => tail,
                    });
                }
                out.expect("nonempty time interval")
            }
        }
    }

    /// Range of `r_des` over t ∈ `t`, p_y ∈ `p_y`.
    pub fn r_des_range(&self, t: Interval, p_y: Interval) -> Interval {
        match self.family {
            Family::SpeedChange => Interval::point(0.0),
            Family::DirectionChange => {
                let mut out: Option<Interval> = None;
                if t.lo < self.t_nb {
                    // w(t) = (1−cos(2πt/t_nb))/2 ∈ [0,1]; exact via the cosine range.
                    let arg = Interval::new(t.lo, t.hi.min(self.t_nb))
                        * (2.0 * std::f64::consts::PI / self.t_nb);
                    let w = (1.0 - arg.cos()) * 0.5;
                    out = Some(w * p_y);
                }
                if t.hi >= self.t_nb {
                    let tail = Interval::point(0.0);
                    out = Some(match out {
                        Some(acc) => acc.hull(tail),
                        None => tail,
                    });
                }
                out.expect("nonempty time interval")
            }
            Family::LaneChange => {
                let mut out: Option<Interval> = None;
                if t.lo < self.t_nb {
                    // g(s) = −2 h2 s e^{−h2 s²} has critical points at
                    // s = ±1/√(2 h2); evaluate endpoints plus interior critical points.
                    let g = |s: f64| -2.0 * self.h2 * s * (-self.h2 * s * s).exp();
                    let s = Interval::new(t.lo - 0.5 * self.t_nb, t.hi.min(self.t_nb) - 0.5 * self.t_nb);
                    let s_crit = 1.0 / (2.0 * self.h2).sqrt();
                    let mut lo = g(s.lo).min(g(s.hi));
                    let mut hi = g(s.lo).max(g(s.hi));
                    for c in [-s_crit, s_crit] {
                        if s.contains(c) {
                            lo = lo.min(g(c));
                            hi = hi.max(g(c));
                        }
                    }
                    out = Some(Interval::new(lo, hi) * p_y * self.h1);
                }
                if t.hi >= self.t_nb {
                    let tail = Interval::point(0.0);
                    out = Some(match out {
                        Some(acc) => acc.hull(tail),
                        None => tail,
                    });
                }
                out.expect("nonempty time interval")
            }
        }
    }

    /// Range of `dr_des` over t ∈ `t`, p_y ∈ `p_y`.
    pub fn dr_des_range(&self, t: Interval, p_y: Interval) -> Interval {
        match self.family {
            Family::SpeedChange => Interval::point(0.0),
            Family::DirectionChange => {
                let mut out: Option<Interval> = None;
                if t.lo < self.t_nb {
                    let w = 2.0 * std::f64::consts::PI / self.t_nb;
                    let arg = Interval::new(t.lo, t.hi.min(self.t_nb)) * w;
                    out = Some(arg.sin() * p_y * (0.5 * w));
                }
                if t.hi >= self.t_nb {
                    let tail = Interval::point(0.0);
                    out = Some(match out {
                        Some(acc) => acc.hull(tail),
                        None => tail,
                    });
                }
                out.expect("nonempty time interval")
            }
            Family::LaneChange => {
                let mut out: Option<Interval> = None;
                if t.lo < self.t_nb {
                    // q(s) = −2 h2 e^{−h2 s²}(1 − 2 h2 s²); critical points of q
                    // are s = 0 and s = ±√(3/(2 h2)).
                    let q = |s: f64| {
                        -2.0 * self.h2 * (-self.h2 * s * s).exp() * (1.0 - 2.0 * self.h2 * s * s)
                    };
                    let s = Interval::new(t.lo - 0.5 * self.t_nb, t.hi.min(self.t_nb) - 0.5 * self.t_nb);
                    let s_crit = (3.0 / (2.0 * self.h2)).sqrt();
                    let mut lo = q(s.lo).min(q(s.hi));
                    let mut hi = q(s.lo).max(q(s.hi));
                    for c in [-s_crit, 0.0, s_crit] {
                        if s.contains(c) {
                            lo = lo.min(q(c));
                            hi = hi.max(q(c));
                        }
                    }
                    out = Some(Interval::new(lo, hi) * p_y * self.h1);
                }
                if t.hi >= self.t_nb {
                    let tail = Interval::point(0.0);
                    out = Some(match out {
                        Some(acc) => acc.hull(tail),
                        None => tail,
                    });
                }
                out.expect("nonempty time interval")
            }
        }
    }
}

/// A desired trajectory bound to concrete start conditions: family constants,
/// the chosen parameter, the start speed u0 and start heading h0.
#[derive(Debug, Clone, PartialEq)]
pub struct Maneuver {
    pub shape: FamilyShape,
    pub p: TrajParam,
    pub u0: f64,
    pub h0: f64,
}

impl Maneuver {
    pub fn new(shape: FamilyShape, p: TrajParam, u0: f64, h0: f64) -> Maneuver {
        debug_assert_eq!(shape.family, p.family);
        Maneuver { shape, p, u0, h0 }
    }

    pub fn t_stop(&self) -> f64 {
        self.shape.t_stop(self.p.p_u)
    }

    pub fn u_des(&self, t: f64) -> f64 {
        self.shape.u_des(t, self.u0, self.p.p_u)
    }

    pub fn du_des(&self, t: f64) -> f64 {
        self.shape.du_des(t, self.u0, self.p.p_u)
    }

    pub fn h_des(&self, t: f64) -> f64 {
        self.h0 + self.shape.h_des(t, self.p.p_y)
    }

    pub fn r_des(&self, t: f64) -> f64 {
        self.shape.r_des(t, self.p.p_y)
    }

    pub fn dr_des(&self, t: f64) -> f64 {
        self.shape.dr_des(t, self.p.p_y)
    }

    pub fn h_final(&self) -> f64 {
        self.h0 + self.shape.h_final(self.p.p_y)
    }
}

/// A named defining-property violation from `validate_family`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyFailure {
    /// Which defining property failed (1: braking monotonicity, 2: stops and
    /// stays stopped, 4: yaw rate is the heading derivative).
    pub property: u8,
    pub detail: String,
}

impl std::fmt::Display for PropertyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "desired-trajectory property {} violated: {}", self.property, self.detail)
    }
}

/// Check the defining properties of a bound maneuver on a sample grid over
/// [t_nb, t_horizon]: braking-phase monotonicity, the stop property, and
/// consistency of the yaw rate with the heading derivative. Returns all
/// detected violations (empty means the maneuver is well formed).
pub fn validate_family(m: &Maneuver, t_horizon: f64) -> Vec<PropertyFailure> {
    let mut failures = Vec::new();
    let t_nb = m.shape.t_nb;
    let t_stop = m.t_stop();
    let n = 2000;
    let h_final = m.h_final();

    // Property 1: |u_des|, |h_des − h_final| and |r_des| non-increasing on the
    // braking phase.
    let mut prev: Option<(f64, f64, f64)> = None;
    for i in 0..=n {
        let t = t_nb + (t_horizon - t_nb) * i as f64 / n as f64;
        let tuple = (
            m.u_des(t).abs(),
            (m.h_des(t) - h_final).abs(),
            m.r_des(t).abs(),
        );
        if let Some(p) = prev {
            if tuple.0 > p.0 + 1e-9 || tuple.1 > p.1 + 1e-9 || tuple.2 > p.2 + 1e-9 {
                failures.push(PropertyFailure {
                    property: 1,
                    detail: format!("braking-phase magnitude increased at t = {t:.4}"),
                });
                break;
            }
        }
        prev = Some(tuple);
    }

    // Property 2: desired speed and yaw rate vanish for all t ≥ t_stop.
    if t_stop > t_horizon {
        failures.push(PropertyFailure {
            property: 2,
            detail: format!("t_stop = {t_stop:.4} exceeds horizon {t_horizon:.4}: trajectory never stops"),
        });
    } else {
        for i in 0..=n {
            let t = t_stop + (t_horizon - t_stop) * i as f64 / n as f64;
            if m.u_des(t) != 0.0 || m.r_des(t) != 0.0 {
                failures.push(PropertyFailure {
                    property: 2,
                    detail: format!("nonzero desired speed or yaw rate at t = {t:.4} ≥ t_stop"),
                });
                break;
            }
        }
    }

    // Property 4: r_des equals the heading derivative at smooth points.
    let eps = 1e-5;
    let mut worst = 0.0_f64;
    for i in 0..1000 {
        let t = t_horizon * (i as f64 + 0.5) / 1000.0;
        // Skip the piece boundaries where h_des is not differentiable.
        if (t - t_nb).abs() < 10.0 * eps || (t - t_stop).abs() < 10.0 * eps || t < 10.0 * eps {
            continue;
        }
        let fd = (m.h_des(t + eps) - m.h_des(t - eps)) / (2.0 * eps);
        worst = worst.max((fd - m.r_des(t)).abs());
    }
    if worst >= 1e-6 {
        failures.push(PropertyFailure {
            property: 4,
            detail: format!("yaw rate deviates from heading derivative by {worst:.2e}"),
        });
    }

    failures
}

//! The bicycle vehicle model: linear-regime tire forces, high- and low-speed
//! plant dynamics, the guarded hybrid integration step, and seeded bounded
//! disturbance realizations.
//!
//! The high-speed model drives the full planar dynamics from tire forces; at
//! and below the critical speed `u_crit` a steady-state cornering model takes
//! over, with lateral speed and yaw rate computed directly from steering
//! rather than integrated.

use crate::config::{Drive, ErrorBounds, VehicleParams};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::fmt;

/// Planar vehicle state: world position and heading, body-frame longitudinal
/// and lateral speeds, and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State6 {
    pub x: f64,
    pub y: f64,
    pub h: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl State6 {
    pub fn from_array(a: [f64; 6]) -> State6 {
        State6 { x: a[0], y: a[1], h: a[2], u: a[3], v: a[4], r: a[5] }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.x, self.y, self.h, self.u, self.v, self.r]
    }
}

/// Which dynamics govern the vehicle: the tire-force model above `u_crit`,
/// the steady-state cornering model at or below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    High,
    Low,
}

impl Mode {
    /// The mode consistent with a longitudinal speed.
    pub fn of(u: f64, u_crit: f64) -> Mode {
        if u > u_crit {
            Mode::High
        } else {
            Mode::Low
        }
    }
}

/// Actuator commands: front/rear wheel rotational speeds and steering angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Commands {
    pub omega_f: f64,
    pub omega_r: f64,
    pub delta: f64,
}

/// What the plant holds between command updates.
///
/// At high speed the wheel-speed commands are held and forces follow the slip
/// model. At low speed a held wheel speed acts as a stiff velocity servo —
/// the commanded force would die within one hold period — so the actuator
/// abstraction there is the longitudinal force command itself (`fx_low`),
/// which the wheel-speed controller tracks at its own bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Actuation {
    pub wheel: Commands,
    /// Total longitudinal force realized directly while in the low-speed
    /// mode; `None` falls back to the slip model from the held wheel speeds.
    pub fx_low: Option<f64>,
}

impl Actuation {
    /// Hold wheel-speed commands only (high-speed behavior everywhere).
    pub fn wheels(cmd: Commands) -> Actuation {
        Actuation { wheel: cmd, fx_low: None }
    }
}

/// Tire forces in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TireForces {
    pub fxf: f64,
    pub fxr: f64,
    pub fyf: f64,
    pub fyr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VehicleError {
    /// The tire-force model divides by u; it is only valid above the critical speed.
    LowSpeedTireModel { u: f64 },
    /// Acceleration-branch slip divides by the wheel speed.
    ZeroWheelSpeed,
    /// The integrator crossed the mode guard too many times in one step.
    Chattering { crossings: usize, t: f64 },
}

impl fmt::Display for VehicleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VehicleError::LowSpeedTireModel { u } => {
                write!(f, "tire-force model invalid at u = {u} (at or below the critical speed)")
            }
            VehicleError::ZeroWheelSpeed => {
                write!(f, "wheel speed is zero in the acceleration slip branch")
            }
            VehicleError::Chattering { crossings, t } => {
                write!(f, "mode guard crossed {crossings} times within one step near t = {t}")
            }
        }
    }
}

impl std::error::Error for VehicleError {}

/// Wheel slip ratio: (r_w·ω − u)/u while braking (r_w·ω < u), over r_w·ω while
/// accelerating. Clamped to [−1, 1]: the linear force law is only meaningful
/// well inside that range, and the clamp keeps the plant bounded when a held
/// command goes stale near a stop.
fn slip_ratio(u: f64, omega: f64, rw: f64) -> Result<f64, VehicleError> {
    let s = rw * omega - u;
    let lambda = if s < 0.0 {
        if u <= 0.0 {
            0.0
        } else {
            s / u
        }
    } else if omega > 0.0 {
        s / (rw * omega)
    } else if s == 0.0 {
        // u = 0 and ω = 0: parked.
        0.0
    } else {
        return Err(VehicleError::ZeroWheelSpeed);
    };
    Ok(lambda.clamp(-1.0, 1.0))
}

/// Linear-regime tire forces from wheel-speed and steering commands. Valid
/// only above the critical speed where the slip denominators are well away
/// from zero. Non-driven axles roll freely: their longitudinal force is zero.
pub fn tire_forces_linear(
    z: &State6,
    cmd: &Commands,
    p: &VehicleParams,
) -> Result<TireForces, VehicleError> {
    if z.u <= p.u_crit {
        return Err(VehicleError::LowSpeedTireModel { u: z.u });
    }
    let l = p.wheelbase();
    let front_gain = p.m * p.g * p.lr / l * p.mu_bar;
    let rear_gain = p.m * p.g * p.lf / l * p.mu_bar;
    let (fxf, fxr) = match p.drive {
        Drive::Front => (front_gain * slip_ratio(z.u, cmd.omega_f, p.rw)?, 0.0),
        Drive::Rear => (0.0, rear_gain * slip_ratio(z.u, cmd.omega_r, p.rw)?),
        Drive::All => (
            front_gain * slip_ratio(z.u, cmd.omega_f, p.rw)?,
            rear_gain * slip_ratio(z.u, cmd.omega_r, p.rw)?,
        ),
    };
    let alpha_f = cmd.delta - (z.v + p.lf * z.r) / z.u;
    let alpha_r = -(z.v - p.lr * z.r) / z.u;
    Ok(TireForces {
        fxf,
        fxr,
        fyf: p.c_af * alpha_f,
        fyr: p.c_ar * alpha_r,
    })
}

/// Slip ratio and angles at a state under given commands (diagnostics and
/// slip-regime validation). Returns (λ_f, λ_r, α_f, α_r).
pub fn slip_values(z: &State6, cmd: &Commands, p: &VehicleParams) -> (f64, f64, f64, f64) {
    let lf = slip_ratio(z.u, cmd.omega_f, p.rw).unwrap_or(f64::NAN);
    let lr_ = slip_ratio(z.u, cmd.omega_r, p.rw).unwrap_or(f64::NAN);
    let u = z.u.max(1e-9);
    let alpha_f = cmd.delta - (z.v + p.lf * z.r) / u;
    let alpha_r = -(z.v - p.lr * z.r) / u;
    (lf, lr_, alpha_f, alpha_r)
}

/// High-speed planar dynamics driven by explicit tire forces and additive
/// disturbances (du, dv, dr) on the speed states.
pub fn dynamics_high(z: &State6, f: &TireForces, d: (f64, f64, f64), p: &VehicleParams) -> [f64; 6] {
    [
        z.u * z.h.cos() - z.v * z.h.sin(),
        z.u * z.h.sin() + z.v * z.h.cos(),
        z.r,
        (f.fxf + f.fxr) / p.m + z.v * z.r + d.0,
        (f.fyf + f.fyr) / p.m - z.u * z.r + d.1,
        (p.lf * f.fyf - p.lr * f.fyr) / p.izz + d.2,
    ]
}

/// Steady-state cornering relations: lateral speed and yaw rate implied by the
/// steering angle at a low longitudinal speed.
pub fn low_speed_lateral(u: f64, delta: f64, p: &VehicleParams) -> (f64, f64) {
    let l = p.wheelbase();
    let r_lo = delta * u / (l + p.understeer() * u * u);
    let v_lo = (p.lr - p.m * p.lf * u * u / (p.c_ar * l)) * r_lo;
    (v_lo, r_lo)
}

/// Longitudinal tire forces at low speed from held wheel-speed commands.
pub fn longitudinal_force_low(u: f64, cmd: &Commands, p: &VehicleParams) -> (f64, f64) {
    let l = p.wheelbase();
    let front_gain = p.m * p.g * p.lr / l * p.mu_bar;
    let rear_gain = p.m * p.g * p.lf / l * p.mu_bar;
    // The clamp in `slip_ratio` keeps this well-defined down to u = 0.
    let lam_f = slip_ratio(u, cmd.omega_f, p.rw).unwrap_or(0.0);
    let lam_r = slip_ratio(u, cmd.omega_r, p.rw).unwrap_or(0.0);
    match p.drive {
        Drive::Front => (front_gain * lam_f, 0.0),
        Drive::Rear => (0.0, rear_gain * lam_r),
        Drive::All => (front_gain * lam_f, rear_gain * lam_r),
    }
}

/// Low-speed dynamics: position and heading move under the steady-state
/// lateral relations while v and r themselves are frozen. Returns the
/// derivative of [x, y, h, u] plus the implied (v_lo, r_lo).
pub fn dynamics_low(
    z: &State6,
    cmd: &Commands,
    du_dist: f64,
    p: &VehicleParams,
) -> ([f64; 4], f64, f64) {
    let (v_lo, r_lo) = low_speed_lateral(z.u, cmd.delta, p);
    let (fxf, fxr) = longitudinal_force_low(z.u, cmd, p);
    let rhs = [
        z.u * z.h.cos() - v_lo * z.h.sin(),
        z.u * z.h.sin() + v_lo * z.h.cos(),
        r_lo,
        (fxf + fxr) / p.m + v_lo * r_lo + du_dist,
    ];
    (rhs, v_lo, r_lo)
}

/// A seeded, band-limited realization of the bounded unmodeled dynamics.
///
/// Each channel is a normalized mixture of low-frequency sinusoids scaled to
/// `scale` times its modeled bound; the longitudinal channel respects the
/// affine low-speed envelope and vanishes with u so a parked vehicle stays
/// parked.
#[derive(Debug, Clone)]
pub struct DisturbanceSignal {
    comps: [[(f64, f64, f64); 5]; 3],
    norms: [f64; 3],
    scale: f64,
    bounds: ErrorBounds,
}

impl DisturbanceSignal {
    pub fn new(seed: u64, bounds: &ErrorBounds, scale: f64) -> DisturbanceSignal {
        assert!((0.0..=1.0).contains(&scale), "disturbance scale must be in [0, 1]");
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut comps = [[(0.0, 0.0, 0.0); 5]; 3];
        let mut norms = [0.0; 3];
        for (ch, norm) in comps.iter_mut().zip(norms.iter_mut()) {
            let mut total = 0.0;
            for slot in ch.iter_mut() {
                let amp: f64 = rng.gen_range(0.3..1.0);
                let freq: f64 = rng.gen_range(0.05..1.5);
                let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                *slot = (amp, freq, phase);
                total += amp;
            }
            *norm = total;
        }
        DisturbanceSignal { comps, norms, scale, bounds: bounds.clone() }
    }

    /// A realization that is identically zero (nominal rollouts).
    pub fn zero(bounds: &ErrorBounds) -> DisturbanceSignal {
        DisturbanceSignal {
            comps: [[(0.0, 1.0, 0.0); 5]; 3],
            norms: [1.0; 3],
            scale: 0.0,
            bounds: bounds.clone(),
        }
    }

    fn wave(&self, ch: usize, t: f64) -> f64 {
        let mut acc = 0.0;
        for &(amp, freq, phase) in &self.comps[ch] {
            acc += amp * (std::f64::consts::TAU * freq * t + phase).sin();
        }
        acc / self.norms[ch]
    }

    /// Evaluate (Δu, Δv, Δr) at time t and longitudinal speed u.
    pub fn eval(&self, t: f64, u: f64) -> (f64, f64, f64) {
        // |Δu| must respect both the constant bound and the affine low-speed
        // envelope, and must vanish at u = 0.
        let env_u = self
            .bounds
            .m_u
            .min(self.bounds.b_pro * u.max(0.0) + self.bounds.b_off);
        let gate = (u / 0.01).clamp(0.0, 1.0);
        (
            self.scale * env_u * gate * self.wave(0, t),
            self.scale * self.bounds.m_v * self.wave(1, t),
            self.scale * self.bounds.m_r * self.wave(2, t),
        )
    }
}

/// Below this speed, with a zero desired speed, the vehicle is snapped to a
/// full stop (the tail of the exponential decay carries no information).
pub const STOP_CAPTURE: f64 = 1e-4;

/// Speed below which a vehicle braking to a stop switches from the tracking
/// loop to the final-crawl stopping regime (wheels held, assist active).
pub const STOP_REGIME_SPEED: f64 = 0.15;

/// Extra deceleration applied below `STOP_REGIME_SPEED` while braking to a
/// stop. Models the observed behavior that a braking vehicle comes to rest
/// from that speed within `t_fstop` rather than decaying asymptotically. The
/// magnitude is chosen so that even against the worst disturbance the crawl
/// ends within t_fstop/2: net deceleration stays above 2·STOP_REGIME_SPEED/t_fstop.
pub fn stop_assist_decel(bounds: &ErrorBounds, t_fstop: f64) -> f64 {
    assert!(t_fstop > 0.0);
    2.0 * STOP_REGIME_SPEED / t_fstop
        + bounds
            .m_u
            .min(bounds.b_pro * STOP_REGIME_SPEED + bounds.b_off)
}

/// Report from one guarded integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Guard crossings handled during the step.
    pub crossings: usize,
}

fn rhs(z: &State6, mode: Mode, act: &Actuation, dist: (f64, f64, f64), stop_assist: f64, p: &VehicleParams) -> [f64; 6] {
    let cmd = &act.wheel;
    match mode {
        Mode::High => {
            let forces = tire_forces_linear(z, cmd, p).unwrap_or_else(|_| {
                // The integrator may probe slightly past the guard inside a
                // step; evaluate the model there anyway (the guard handler
                // will cut the step at the crossing).
                let mut zz = *z;
                zz.u = p.u_crit + 1e-9;
                tire_forces_linear(&zz, cmd, p).expect("u above critical")
            });
            dynamics_high(z, &forces, dist, p)
        }
        Mode::Low => {
            if stop_assist > 0.0 && z.u <= STOP_REGIME_SPEED {
                // Final-crawl stopping regime: the slip force no longer
                // applies (wheels effectively locked); the vehicle sheds its
                // remaining speed at the assist rate.
                let (v_lo, r_lo) = low_speed_lateral(z.u, cmd.delta, p);
                let du = if z.u > 0.0 { -stop_assist + dist.0 } else { 0.0 };
                return [
                    z.u * z.h.cos() - v_lo * z.h.sin(),
                    z.u * z.h.sin() + v_lo * z.h.cos(),
                    r_lo,
                    du,
                    0.0,
                    0.0,
                ];
            }
            match act.fx_low {
                Some(fx) => {
                    let (v_lo, r_lo) = low_speed_lateral(z.u, cmd.delta, p);
                    [
                        z.u * z.h.cos() - v_lo * z.h.sin(),
                        z.u * z.h.sin() + v_lo * z.h.cos(),
                        r_lo,
                        fx / p.m + v_lo * r_lo + dist.0,
                        0.0,
                        0.0,
                    ]
                }
                None => {
                    let (low, _, _) = dynamics_low(z, cmd, dist.0, p);
                    [low[0], low[1], low[2], low[3], 0.0, 0.0]
                }
            }
        }
    }
}

fn rk4_aux(
    z: &State6,
    aux: &[f64; 3],
    mode: Mode,
    act: &Actuation,
    dist: &DisturbanceSignal,
    t: f64,
    dt: f64,
    stop_assist: f64,
    p: &VehicleParams,
    aux_rhs: &impl Fn(&State6, f64, Mode) -> [f64; 3],
) -> (State6, [f64; 3]) {
    let f = |zz: &State6, tt: f64| rhs(zz, mode, act, dist.eval(tt, zz.u.max(0.0)), stop_assist, p);
    let a = z.as_array();
    let k1 = f(z, t);
    let a1 = aux_rhs(z, t, mode);
    let step = |k: &[f64; 6], h: f64| {
        let mut out = [0.0; 6];
        for i in 0..6 {
            out[i] = a[i] + h * k[i];
        }
        State6::from_array(out)
    };
    let z2 = step(&k1, dt / 2.0);
    let k2 = f(&z2, t + dt / 2.0);
    let a2 = aux_rhs(&z2, t + dt / 2.0, mode);
    let z3 = step(&k2, dt / 2.0);
    let k3 = f(&z3, t + dt / 2.0);
    let a3 = aux_rhs(&z3, t + dt / 2.0, mode);
    let z4 = step(&k3, dt);
    let k4 = f(&z4, t + dt);
    let a4 = aux_rhs(&z4, t + dt, mode);
    let mut out = [0.0; 6];
    for i in 0..6 {
        out[i] = a[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let mut z_next = State6::from_array(out);
    // The longitudinal speed is physically nonnegative under these commands.
    if z_next.u < 0.0 {
        z_next.u = 0.0;
    }
    let mut aux_next = [0.0; 3];
    for i in 0..3 {
        aux_next[i] = aux[i] + dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
    }
    (z_next, aux_next)
}

fn no_aux(_z: &State6, _t: f64, _m: Mode) -> [f64; 3] {
    [0.0; 3]
}

fn rk4(z: &State6, mode: Mode, act: &Actuation, dist: &DisturbanceSignal, t: f64, dt: f64, stop_assist: f64, p: &VehicleParams) -> State6 {
    rk4_aux(z, &[0.0; 3], mode, act, dist, t, dt, stop_assist, p, &no_aux).0
}

/// Advance the hybrid vehicle model by `dt` under held commands, integrating
/// up to three auxiliary accumulator states on the same RK4 grid.
///
/// Integrates the current mode, locates any guard crossing (u passing the
/// critical speed) by bisection to 1e-6 s, applies the corresponding reset,
/// and continues in the new mode. More than 8 crossings in one call is
/// reported as chattering. A positive `stop_assist` enables the extra
/// deceleration below 0.15 m/s and the stop capture used while tracking a
/// zero desired speed. `aux_rhs` gives the accumulator derivatives as a
/// function of the vehicle state, time, and active mode; accumulators do not
/// feed back into the plant within the step.
#[allow(clippy::too_many_arguments)]
pub fn hybrid_step_aux(
    z: &mut State6,
    aux: &mut [f64; 3],
    mode: &mut Mode,
    act: &Actuation,
    dist: &DisturbanceSignal,
    t: f64,
    dt: f64,
    stop_assist: f64,
    p: &VehicleParams,
    aux_rhs: &impl Fn(&State6, f64, Mode) -> [f64; 3],
) -> Result<StepReport, VehicleError> {
    let mut crossings = 0;
    let mut t_cur = t;
    let mut remaining = dt;

    while remaining > 1e-12 {
        let (candidate, aux_candidate) =
            rk4_aux(z, aux, *mode, act, dist, t_cur, remaining, stop_assist, p, aux_rhs);
        let crossed = match *mode {
            Mode::High => candidate.u <= p.u_crit,
            Mode::Low => candidate.u > p.u_crit,
        };
        if !crossed {
            *z = candidate;
            *aux = aux_candidate;
            break;
        }

        crossings += 1;
        if crossings > 8 {
            return Err(VehicleError::Chattering { crossings, t: t_cur });
        }

        // Bisect the step length until the crossing time is pinned to 1e-6 s.
        let mut lo = 0.0_f64;
        let mut hi = remaining;
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            let probe = rk4(z, *mode, act, dist, t_cur, mid, stop_assist, p);
            let before = match *mode {
                Mode::High => probe.u > p.u_crit,
                Mode::Low => probe.u <= p.u_crit,
            };
            if before {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (mut at_guard, aux_guard) =
            rk4_aux(z, aux, *mode, act, dist, t_cur, hi, stop_assist, p, aux_rhs);
        match *mode {
            Mode::High => {
                // High → low: keep position, heading and speed; v and r freeze.
                at_guard.u = at_guard.u.min(p.u_crit);
                *mode = Mode::Low;
            }
            Mode::Low => {
                // Low → high: re-initialize v and r from the steady-state
                // cornering relations at the crossing.
                let (v_lo, r_lo) = low_speed_lateral(at_guard.u, act.wheel.delta, p);
                at_guard.v = v_lo;
                at_guard.r = r_lo;
                *mode = Mode::High;
            }
        }
        *z = at_guard;
        *aux = aux_guard;
        t_cur += hi;
        remaining = (t + dt) - t_cur;
    }

    if stop_assist > 0.0 && z.u < STOP_CAPTURE {
        z.u = 0.0;
    }
    Ok(StepReport { crossings })
}

/// `hybrid_step_aux` without accumulator states.
pub fn hybrid_step(
    z: &mut State6,
    mode: &mut Mode,
    act: &Actuation,
    dist: &DisturbanceSignal,
    t: f64,
    dt: f64,
    stop_assist: f64,
    p: &VehicleParams,
) -> Result<StepReport, VehicleError> {
    let mut aux = [0.0; 3];
    hybrid_step_aux(z, &mut aux, mode, act, dist, t, dt, stop_assist, p, &no_aux)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use rand::prelude::*;

    fn params() -> VehicleParams {
        Config::default().vehicle
    }

    #[test]
    fn free_rolling_front_wheel_gives_zero_longitudinal_force() {
        let p = params();
        let z = State6 { x: 0.0, y: 0.0, h: 0.0, u: 20.0, v: 0.0, r: 0.0, };
        let cmd = Commands { omega_f: 20.0 / p.rw, omega_r: 20.0 / p.rw, delta: 0.0 };
        let f = tire_forces_linear(&z, &cmd, &p).unwrap();
        assert_eq!(f.fxf, 0.0);
        assert_eq!(f.fxr, 0.0, "front-wheel drive: rear rolls freely");
        assert_eq!(f.fyf, 0.0);
        assert_eq!(f.fyr, 0.0);
    }

    #[test]
    fn tire_forces_match_hand_computation() {
        // Independent evaluation of the slip/force formulas.
        let p = params();
        let z = State6 { x: 0.0, y: 0.0, h: 0.3, u: 20.0, v: 0.3, r: 0.1 };
        let cmd = Commands { omega_f: 58.0, omega_r: 20.0 / p.rw, delta: 0.05 };
        let f = tire_forces_linear(&z, &cmd, &p).unwrap();

        let s = p.rw * 58.0 - 20.0; // = -0.86 → braking branch
        assert!(s < 0.0);
        let lambda_f = s / 20.0;
        let fxf = p.m * p.g * p.lr / (p.lf + p.lr) * p.mu_bar * lambda_f;
        assert!((f.fxf - fxf).abs() < 1e-9);
        assert_eq!(f.fxr, 0.0);

        let alpha_f = 0.05 - (0.3 + p.lf * 0.1) / 20.0;
        let alpha_r = -(0.3 - p.lr * 0.1) / 20.0;
        assert!((f.fyf - p.c_af * alpha_f).abs() < 1e-9);
        assert!((f.fyr - p.c_ar * alpha_r).abs() < 1e-9);
    }

    #[test]
    fn tire_forces_reject_low_speed() {
        let p = params();
        let z = State6 { x: 0.0, y: 0.0, h: 0.0, u: p.u_crit, v: 0.0, r: 0.0 };
        let cmd = Commands { omega_f: 1.0, omega_r: 1.0, delta: 0.0 };
        assert!(matches!(
            tire_forces_linear(&z, &cmd, &p),
            Err(VehicleError::LowSpeedTireModel { .. })
        ));
    }

    #[test]
    fn high_speed_dynamics_zero_forces() {
        // With no forces and v = r = 0 the vehicle coasts straight along its
        // heading.
        let p = params();
        let f = TireForces { fxf: 0.0, fxr: 0.0, fyf: 0.0, fyr: 0.0 };
        let z = State6 { x: 1.0, y: 2.0, h: 0.4, u: 10.0, v: 0.0, r: 0.0 };
        let dz = dynamics_high(&z, &f, (0.0, 0.0, 0.0), &p);
        assert!((dz[0] - 10.0 * 0.4_f64.cos()).abs() < 1e-15);
        assert!((dz[1] - 10.0 * 0.4_f64.sin()).abs() < 1e-15);
        assert_eq!(&dz[2..], &[0.0, 0.0, 0.0, 0.0]);

        // Heading π/2 sends all speed into y.
        let z2 = State6 { h: std::f64::consts::FRAC_PI_2, ..z };
        let dz2 = dynamics_high(&z2, &f, (0.0, 0.0, 0.0), &p);
        assert!(dz2[0].abs() < 1e-12);
        assert!((dz2[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn low_speed_full_stop_is_equilibrium() {
        let p = params();
        let z = State6 { x: 0.0, y: 0.0, h: 0.2, u: 0.0, v: 0.0, r: 0.0 };
        let cmd = Commands { omega_f: 0.0, omega_r: 0.0, delta: 0.0 };
        let (rhs, v_lo, r_lo) = dynamics_low(&z, &cmd, 0.0, &p);
        assert_eq!(rhs, [0.0; 4]);
        assert_eq!(v_lo, 0.0);
        assert_eq!(r_lo, 0.0);
    }

    #[test]
    fn low_speed_lateral_matches_formulas() {
        let p = params();
        let u = 0.4;
        let delta = 0.1;
        let (v_lo, r_lo) = low_speed_lateral(u, delta, &p);
        let l = p.lf + p.lr;
        let r_expect = delta * u / (l + p.understeer() * u * u);
        let v_expect = (p.lr - p.m * p.lf * u * u / (p.c_ar * l)) * r_expect;
        assert!((r_lo - r_expect).abs() < 1e-15);
        assert!((v_lo - v_expect).abs() < 1e-15);
    }

    #[test]
    fn disturbance_respects_bounds_everywhere() {
        let cfg = Config::default();
        let mut rng = StdRng::seed_from_u64(99);
        for seed in 0..20 {
            let d = DisturbanceSignal::new(seed, &cfg.bounds, 0.7);
            for _ in 0..5000 {
                let t = rng.gen_range(0.0..30.0);
                let u = rng.gen_range(0.0..30.0);
                let (du, dv, dr) = d.eval(t, u);
                let env = cfg.bounds.m_u.min(cfg.bounds.b_pro * u + cfg.bounds.b_off);
                assert!(du.abs() <= env + 1e-12);
                assert!(dv.abs() <= cfg.bounds.m_v + 1e-12);
                assert!(dr.abs() <= cfg.bounds.m_r + 1e-12);
            }
            // A parked vehicle feels no longitudinal disturbance.
            let (du0, _, _) = d.eval(3.3, 0.0);
            assert_eq!(du0, 0.0);
        }
    }

    #[test]
    fn hybrid_step_crosses_guard_with_reset() {
        let p = params();
        // Braking through the critical speed: start just above it with a
        // strongly braking wheel command.
        let mut z = State6 { x: 0.0, y: 0.0, h: 0.0, u: 0.6, v: 0.01, r: 0.02 };
        let mut mode = Mode::High;
        let cmd = Commands { omega_f: 0.0, omega_r: 0.6 / p.rw, delta: 0.0 };
        let dist = DisturbanceSignal::zero(&Config::default().bounds);
        let assist = stop_assist_decel(&Config::default().bounds, 0.1);
        let mut crossings = 0;
        for k in 0..400 {
            let rep = hybrid_step(&mut z, &mut mode, &Actuation::wheels(cmd), &dist, k as f64 * 1e-3, 1e-3, assist, &p)
                .unwrap();
            crossings += rep.crossings;
            if mode == Mode::Low {
                break;
            }
        }
        assert_eq!(crossings, 1);
        assert_eq!(mode, Mode::Low);
        assert!(z.u <= p.u_crit + 1e-9);
        // High→low keeps v and r frozen at their crossing values.
        assert!(z.v.abs() > 0.0 || z.r.abs() > 0.0);
    }

    #[test]
    fn low_to_high_reset_uses_steady_state_lateral() {
        let p = params();
        let mut z = State6 { x: 0.0, y: 0.0, h: 0.0, u: 0.45, v: 0.4, r: 0.4 };
        let mut mode = Mode::Low;
        // Accelerating wheel command pushes u past the critical speed.
        let cmd = Commands { omega_f: 2.0 / p.rw, omega_r: 0.45 / p.rw, delta: 0.05 };
        let dist = DisturbanceSignal::zero(&Config::default().bounds);
        for k in 0..2000 {
            hybrid_step(&mut z, &mut mode, &Actuation::wheels(cmd), &dist, k as f64 * 1e-3, 1e-3, 0.0, &p).unwrap();
            if mode == Mode::High {
                break;
            }
        }
        assert_eq!(mode, Mode::High);
        // v and r were re-seeded from the cornering relations near u_crit,
        // wiping the stale frozen values.
        let (v_lo, r_lo) = low_speed_lateral(p.u_crit, cmd.delta, &p);
        assert!((z.v - v_lo).abs() < 0.05, "v = {} vs {}", z.v, v_lo);
        assert!((z.r - r_lo).abs() < 0.05, "r = {} vs {}", z.r, r_lo);
    }

    #[test]
    fn stopping_vehicle_reaches_exact_zero_and_stays() {
        let p = params();
        let cfg = Config::default();
        let mut z = State6 { x: 0.0, y: 0.0, h: 0.1, u: 0.3, v: 0.0, r: 0.0 };
        let mut mode = Mode::Low;
        let cmd = Commands { omega_f: 0.0, omega_r: 0.0, delta: 0.0 };
        let dist = DisturbanceSignal::new(7, &cfg.bounds, 0.7);
        let assist = stop_assist_decel(&cfg.bounds, 0.1);
        let mut stopped_at = None;
        for k in 0..3000 {
            let t = k as f64 * 1e-3;
            hybrid_step(&mut z, &mut mode, &Actuation::wheels(cmd), &dist, t, 1e-3, assist, &p).unwrap();
            if z.u == 0.0 {
                stopped_at = Some(t);
                break;
            }
        }
        let t_stop = stopped_at.expect("vehicle must stop");
        // From 0.3 m/s with stop assist the stop comes quickly.
        assert!(t_stop < 1.0, "stop took {t_stop} s");
        // And it stays stopped under the same (gated) disturbance.
        for k in 0..500 {
            hybrid_step(&mut z, &mut mode, &Actuation::wheels(cmd), &dist, 3.0 + k as f64 * 1e-3, 1e-3, assist, &p).unwrap();
            assert_eq!(z.u, 0.0);
        }
    }

    #[test]
    fn mode_of_matches_guard() {
        assert_eq!(Mode::of(0.6, 0.5), Mode::High);
        assert_eq!(Mode::of(0.5, 0.5), Mode::Low);
        assert_eq!(Mode::of(0.0, 0.5), Mode::Low);
    }

    #[test]
    fn rk4_accuracy_on_coasting_arc() {
        // Free rolling at constant u with constant r produces an exact circle;
        // compare one simulated second against the closed form.
        let p = params();
        let l = p.lf + p.lr;
        let u = 15.0;
        let r = 0.08;
        // Solve the force balance for an exact equilibrium of (u, v, r):
        // v̇ = 0 and ṙ = 0 fix (v, δ); u̇ = 0 needs Fxf = −m·v·r, commanded
        // through the braking-branch wheel speed.
        let v = {
            // v̇ = (fyf + fyr)/m − u r = 0 with lf·fyf = lr·fyr gives
            // fyr (1 + lr/lf) = m u r, and fyr = c_ar (lr r − v)/u.
            let fyr = p.m * u * r / (1.0 + p.lr / p.lf);
            p.lr * r - fyr * u / p.c_ar
        };
        let fyr = p.c_ar * (p.lr * r - v) / u;
        let fyf = p.lr * fyr / p.lf;
        let delta = fyf / p.c_af + (v + p.lf * r) / u;
        let fxf = -p.m * v * r;
        assert!(fxf < 0.0, "setup expects a (slightly) braking front wheel");
        let omega_f = (l * fxf / (p.mu_bar * p.m * p.g * p.lr) + 1.0) * u / p.rw;

        let mut z = State6 { x: 0.0, y: 0.0, h: 0.0, u, v, r };
        let mut mode = Mode::High;
        let cmd = Commands { omega_f, omega_r: u / p.rw, delta };
        let dist = DisturbanceSignal::zero(&Config::default().bounds);

        // All three speed derivatives vanish at the constructed state.
        let forces = tire_forces_linear(&z, &cmd, &p).unwrap();
        let dz0 = dynamics_high(&z, &forces, (0.0, 0.0, 0.0), &p);
        assert!(dz0[3].abs() < 1e-9 && dz0[4].abs() < 1e-9 && dz0[5].abs() < 1e-9);
        for k in 0..1000 {
            hybrid_step(&mut z, &mut mode, &Actuation::wheels(cmd), &dist, k as f64 * 1e-3, 1e-3, 0.0, &p).unwrap();
        }
        // Closed form: heading h(t) = r t; body velocity (u, v) rotates with it.
        let t = 1.0;
        let h_exact = r * t;
        assert!((z.h - h_exact).abs() < 1e-9);
        let x_exact = (u * (r * t).sin() + v * ((r * t).cos() - 1.0)) / r;
        let y_exact = (u * (1.0 - (r * t).cos()) + v * (r * t).sin()) / r;
        assert!((z.x - x_exact).abs() < 1e-7, "{} vs {}", z.x, x_exact);
        assert!((z.y - y_exact).abs() < 1e-7, "{} vs {}", z.y, y_exact);
    }
}

//! The robust tracking controller: tire-force command laws, actuator-command
//! extraction for each drive type, the guaranteed-stop time bound, and the
//! closed-loop rollout used throughout validation.
//!
//! The command laws cancel the modeled dynamics and inject a robust term that
//! dominates the bounded modeling error; substituting them into the plant
//! gives closed-loop error dynamics that are independent of the tire model.
//! Those closed-loop forms are written once, generically, so the reachability
//! engine can evaluate the exact same expressions over intervals.

use crate::config::{ConfigError, ControllerGains, Drive, ErrorBounds, VehicleParams};
use crate::geom::Real;
use crate::traj::Maneuver;
use crate::vehicle::{
    hybrid_step_aux, low_speed_lateral, stop_assist_decel, Actuation, Commands, DisturbanceSignal,
    Mode,
    State6, StepReport, VehicleError,
};

/// Integrated squared tracking errors. They both adapt the robust-term gains
/// and, mirrored as auxiliary reachability states, bound those gains offline.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrackingAccumulators {
    /// ∫ (u − u_des)² ds since the plan started.
    pub eps_u: f64,
    /// ∫ (r − r_des)² ds.
    pub eps_r: f64,
    /// ∫ (h − h_des)² ds.
    pub eps_h: f64,
}

impl TrackingAccumulators {
    pub fn zero() -> TrackingAccumulators {
        TrackingAccumulators::default()
    }

    /// ∫ ‖u − u_des‖² — drives the longitudinal robust gains.
    pub fn int_eu2(&self) -> f64 {
        self.eps_u
    }

    /// ∫ ‖(r, h) − (r_des, h_des)‖² — drives the yaw robust gains.
    pub fn int_erh2(&self) -> f64 {
        self.eps_r + self.eps_h
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.eps_u, self.eps_r, self.eps_h]
    }

    pub fn from_array(a: [f64; 3]) -> TrackingAccumulators {
        TrackingAccumulators { eps_u: a[0], eps_r: a[1], eps_h: a[2] }
    }
}

/// Rear lateral force estimate from the linear tire model at the current
/// state (the same model the reachability analysis assumes).
pub fn fyr_estimate(z: &State6, p: &VehicleParams) -> f64 {
    p.c_ar * (-(z.v - p.lr * z.r) / z.u)
}

/// Longitudinal front tire force command.
///
/// `fxr_estimate` is the force the rear axle is expected to contribute (zero
/// for front-wheel drive). With this command the closed-loop speed-error
/// dynamics reduce to `u̇ = τ_u + Δu + u̇_des − K_u e_u`.
#[allow(clippy::too_many_arguments)]
pub fn fxf_command(
    z: &State6,
    u_des: f64,
    du_des: f64,
    acc: &TrackingAccumulators,
    g: &ControllerGains,
    b: &ErrorBounds,
    p: &VehicleParams,
    fxr_estimate: f64,
) -> f64 {
    let e_u = z.u - u_des;
    let kappa_u = g.kappa1_u + g.kappa2_u * acc.int_eu2();
    let phi_u = g.phi1_u + g.phi2_u * acc.int_eu2();
    let tau_u = -(kappa_u * b.m_u + phi_u) * e_u;
    -p.m * g.ku * e_u + p.m * du_des - fxr_estimate - p.m * z.v * z.r + p.m * tau_u
}

/// Lateral front tire force command.
///
/// Substituted into the yaw dynamics this yields
/// `ṙ = τ_r + Δr + ṙ_des − K_r(r − r_des) − K_h(h − h_des)`.
#[allow(clippy::too_many_arguments)]
pub fn fyf_command(
    z: &State6,
    h_des: f64,
    r_des: f64,
    dr_des: f64,
    acc: &TrackingAccumulators,
    g: &ControllerGains,
    b: &ErrorBounds,
    p: &VehicleParams,
    fyr_estimate: f64,
) -> f64 {
    let s = acc.int_erh2();
    let kappa_r = g.kappa1_r + g.kappa2_r * s;
    let phi_r = g.phi1_r + g.phi2_r * s;
    let e_r = g.kr * (z.r - r_des) + g.kh * (z.h - h_des);
    let tau_r = -(kappa_r * b.m_r + phi_r) * e_r;
    -(p.izz * g.kr / p.lf) * (z.r - r_des) + (p.izz / p.lf) * dr_des
        - (p.izz * g.kh / p.lf) * (z.h - h_des)
        + (p.lr / p.lf) * fyr_estimate
        + (p.izz / p.lf) * tau_r
}

/// Closed-loop longitudinal dynamics `u̇ = τ_u + Δu + u̇_des − K_u e_u`,
/// valid in both speed modes. Generic so the reachability engine evaluates
/// the identical expression over intervals.
pub fn closed_loop_udot<T: Real>(
    u: T,
    u_des: T,
    du_des: T,
    eps_u: T,
    dist_u: T,
    g: &ControllerGains,
    b: &ErrorBounds,
) -> T {
    let e_u = u - u_des;
    let kappa_u = T::constant(g.kappa1_u) + eps_u.scale(g.kappa2_u);
    let phi_u = T::constant(g.phi1_u) + eps_u.scale(g.phi2_u);
    let tau_u = -((kappa_u.scale(b.m_u) + phi_u) * e_u);
    tau_u + dist_u + du_des - e_u.scale(g.ku)
}

/// The robust yaw term τ_r shared by the closed-loop r and v dynamics.
fn tau_r_term<T: Real>(
    h: T,
    r: T,
    h_des: T,
    r_des: T,
    eps_rh: T,
    g: &ControllerGains,
    b: &ErrorBounds,
) -> T {
    let kappa_r = T::constant(g.kappa1_r) + eps_rh.scale(g.kappa2_r);
    let phi_r = T::constant(g.phi1_r) + eps_rh.scale(g.phi2_r);
    let e_r = (r - r_des).scale(g.kr) + (h - h_des).scale(g.kh);
    -((kappa_r.scale(b.m_r) + phi_r) * e_r)
}

/// Closed-loop yaw dynamics
/// `ṙ = τ_r + Δr + ṙ_des − K_r(r − r_des) − K_h(h − h_des)`.
#[allow(clippy::too_many_arguments)]
pub fn closed_loop_rdot<T: Real>(
    h: T,
    r: T,
    h_des: T,
    r_des: T,
    dr_des: T,
    eps_rh: T,
    dist_r: T,
    g: &ControllerGains,
    b: &ErrorBounds,
) -> T {
    let tau_r = tau_r_term(h, r, h_des, r_des, eps_rh, g, b);
    tau_r + dist_r + dr_des - (r - r_des).scale(g.kr) - (h - h_des).scale(g.kh)
}

/// Closed-loop lateral-speed dynamics under the lateral force command,
/// obtained by substituting the command into the v equation:
/// `v̇ = [ (l/l_f)·F_yr + (I_zz/l_f)·(τ_r + ṙ_des − K_r e_r' − K_h e_h) ]/m − u·r + Δv`.
#[allow(clippy::too_many_arguments)]
pub fn closed_loop_vdot<T: Real>(
    u: T,
    v: T,
    h: T,
    r: T,
    h_des: T,
    r_des: T,
    dr_des: T,
    eps_rh: T,
    dist_v: T,
    g: &ControllerGains,
    b: &ErrorBounds,
    p: &VehicleParams,
) -> T {
    let l = p.wheelbase();
    let tau_r = tau_r_term(h, r, h_des, r_des, eps_rh, g, b);
    let fyr = (r.scale(p.lr) - v) * u.recip().scale(p.c_ar);
    let inner = tau_r + dr_des - (r - r_des).scale(g.kr) - (h - h_des).scale(g.kh);
    (fyr.scale(l / p.lf) + inner.scale(p.izz / p.lf)).scale(1.0 / p.m) - u * r + dist_v
}

/// Split a total longitudinal force demand across both axles so that both
/// tires run at the same slip ratio: `l_f·F_xf = l_r·F_xr` with
/// `F_xf + F_xr = demand`.
pub fn awd_force_split(demand: f64, p: &VehicleParams) -> (f64, f64) {
    let l = p.wheelbase();
    (demand * p.lr / l, demand * p.lf / l)
}

/// Which extraction law applies; the low-speed law needs the desired yaw rate
/// because steering is computed from it directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtractMode {
    High,
    Low { r_des: f64 },
}

/// Extracted actuator commands, with a flag set when the longitudinal demand
/// exceeded what the adhesion-limited slip model can realize (the demand was
/// clamped).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractedInputs {
    pub cmd: Commands,
    pub saturated: bool,
}

/// Wheel speed realizing a longitudinal force on one driven axle.
/// `opposite_arm` is the distance from the center of mass to the *other*
/// axle (l_r for the front axle, l_f for the rear).
fn invert_wheel_speed(fx: f64, u: f64, opposite_arm: f64, p: &VehicleParams) -> (f64, bool) {
    let l = p.wheelbase();
    let lambda = l * fx / (p.mu_bar * p.m * p.g * opposite_arm);
    if fx < 0.0 {
        // Braking: r_w·ω = (λ + 1)·u. λ < −1 would need a reversing wheel.
        if lambda < -1.0 {
            (0.0, true)
        } else {
            ((lambda + 1.0) * u / p.rw, false)
        }
    } else {
        // Accelerating: r_w·ω = u/(1 − λ); λ → 1 is the adhesion limit.
        let (lam, sat) = if lambda >= 0.95 { (0.95, true) } else { (lambda, false) };
        (u / ((1.0 - lam) * p.rw), sat)
    }
}

/// Recover wheel-speed and steering commands from the force commands.
///
/// `fx_total` is the total longitudinal force demand; it lands on the driven
/// axle(s) according to the drive type (for front-wheel drive it is exactly
/// the front-tire force command). A vehicle at rest gets the stop command
/// (ω = 0, δ = 0).
pub fn extract_inputs(
    z: &State6,
    fx_total: f64,
    fyf: f64,
    p: &VehicleParams,
    mode: ExtractMode,
) -> ExtractedInputs {
    if z.u <= 0.0 {
        return ExtractedInputs {
            cmd: Commands { omega_f: 0.0, omega_r: 0.0, delta: 0.0 },
            saturated: false,
        };
    }
    let free_roll = z.u / p.rw;
    let (omega_f, omega_r, saturated) = match p.drive {
        Drive::Front => {
            let (wf, sat) = invert_wheel_speed(fx_total, z.u, p.lr, p);
            (wf, free_roll, sat)
        }
        Drive::Rear => {
            let (wr, sat) = invert_wheel_speed(fx_total, z.u, p.lf, p);
            (free_roll, wr, sat)
        }
        Drive::All => {
            let (fxf, fxr) = awd_force_split(fx_total, p);
            let (wf, sat_f) = invert_wheel_speed(fxf, z.u, p.lr, p);
            let (wr, sat_r) = invert_wheel_speed(fxr, z.u, p.lf, p);
            (wf, wr, sat_f || sat_r)
        }
    };
    let delta = match mode {
        ExtractMode::High => fyf / p.c_af + (z.v + p.lf * z.r) / z.u,
        ExtractMode::Low { r_des } => {
            r_des * (p.wheelbase() + p.understeer() * z.u * z.u) / z.u
        }
    };
    ExtractedInputs {
        cmd: Commands { omega_f, omega_r, delta },
        saturated,
    }
}

/// Time after which a braking vehicle is guaranteed to be at rest, measured
/// from the start of the maneuver. `t_stop` is when the desired speed profile
/// reaches zero; `t_fstop` bounds the final crawl from 0.15 m/s to rest.
///
/// The two middle terms bound the decay of the tracking error from its value
/// at the start of braking down to the 0.15 m/s threshold.
pub fn braking_time(
    g: &ControllerGains,
    b: &ErrorBounds,
    p: &VehicleParams,
    t_stop: f64,
    t_fstop: f64,
) -> Result<f64, ConfigError> {
    g.validate_braking(b, p)?;
    let us = g.u_small(b);
    let qu = g.q_u(b);
    let thresh = crate::vehicle::STOP_REGIME_SPEED;
    Ok(t_fstop
        + (us * us - thresh * thresh) / (2.0 * thresh * thresh * g.ku - 2.0 * qu)
        + ((p.u_crit + us) * (p.u_crit + us) - us * us) / (2.0 * g.ku * us * us)
        + t_stop)
}

/// Timing of the discrete control loop driving a rollout.
#[derive(Debug, Clone, Copy)]
pub struct SimTiming {
    /// Plant integration step [s].
    pub sim_dt: f64,
    /// Command recomputation rate [Hz]; commands are zero-order held.
    pub hold_hz: f64,
}

impl SimTiming {
    pub fn new(sim_dt: f64, hold_hz: f64) -> SimTiming {
        let t = SimTiming { sim_dt, hold_hz };
        let per = t.steps_per_hold();
        assert!(
            (per as f64 * sim_dt * hold_hz - 1.0).abs() < 1e-9,
            "hold period must be a whole number of integration steps"
        );
        t
    }

    fn steps_per_hold(&self) -> usize {
        (1.0 / (self.hold_hz * self.sim_dt)).round().max(1.0) as usize
    }
}

/// One integration step of a closed-loop rollout, handed to the caller's
/// sampling sink.
#[derive(Debug, Clone, Copy)]
pub struct RolloutSample<'a> {
    /// Time since the maneuver started (after this step).
    pub t: f64,
    pub z: &'a State6,
    pub mode: Mode,
    pub acc: &'a TrackingAccumulators,
    /// Commands currently held.
    pub cmd: Commands,
}

#[derive(Debug, Clone)]
pub struct RolloutResult {
    pub z: State6,
    pub mode: Mode,
    pub acc: TrackingAccumulators,
    /// First time the vehicle reached a full stop while braking, if it did.
    pub stopped_at: Option<f64>,
    /// Number of command instants at which the longitudinal demand had to be
    /// clamped to the adhesion limit.
    pub saturated_holds: usize,
}

/// Simulate the closed-loop hybrid vehicle tracking one maneuver.
///
/// Commands are recomputed at `timing.hold_hz` from the measured state and
/// the accumulators, then held; the plant and the accumulators integrate on
/// the same RK4 grid of step `timing.sim_dt`. The sink sees every integration
/// step. Accumulators start at zero: each maneuver is a fresh plan segment.
#[allow(clippy::too_many_arguments)]
pub fn rollout_maneuver(
    z0: &State6,
    man: &Maneuver,
    t_end: f64,
    dist: &DisturbanceSignal,
    g: &ControllerGains,
    b: &ErrorBounds,
    p: &VehicleParams,
    t_fstop: f64,
    timing: SimTiming,
    mut sink: impl FnMut(RolloutSample<'_>),
) -> Result<RolloutResult, VehicleError> {
    let hold_dt = 1.0 / timing.hold_hz;
    let n_sub = timing.steps_per_hold();
    let assist = stop_assist_decel(b, t_fstop);

    let mut z = *z0;
    let mut mode = Mode::of(z.u, p.u_crit);
    let mut aux = [0.0_f64; 3];
    let mut stopped_at = None;
    let mut saturated_holds = 0usize;

    let aux_rhs = |zz: &State6, tt: f64, m: Mode| -> [f64; 3] {
        let e_u = zz.u - man.u_des(tt);
        let e_h = zz.h - man.h_des(tt);
        // At low speed the steering law realizes the desired yaw rate
        // exactly, so no yaw tracking error accrues there.
        let e_r = match m {
            Mode::High => zz.r - man.r_des(tt),
            Mode::Low => 0.0,
        };
        [e_u * e_u, e_r * e_r, e_h * e_h]
    };

    let n_holds = (t_end / hold_dt).ceil() as usize;
    for k in 0..n_holds {
        let t_k = k as f64 * hold_dt;
        let acc = TrackingAccumulators::from_array(aux);
        let u_des = man.u_des(t_k);
        let du_des = man.du_des(t_k);
        let h_des = man.h_des(t_k);
        let r_des = man.r_des(t_k);
        let dr_des = man.dr_des(t_k);
        let braking_to_stop = u_des == 0.0;

        let (act, saturated) = if z.u <= 0.0 {
            (Actuation::wheels(Commands { omega_f: 0.0, omega_r: 0.0, delta: 0.0 }), false)
        } else {
            match mode {
                Mode::High => {
                    let fyr = fyr_estimate(&z, p);
                    let fx_total = fxf_command(&z, u_des, du_des, &acc, g, b, p, 0.0);
                    let fyf = fyf_command(&z, h_des, r_des, dr_des, &acc, g, b, p, fyr);
                    let ex = extract_inputs(&z, fx_total, fyf, p, ExtractMode::High);
                    (Actuation::wheels(ex.cmd), ex.saturated)
                }
                Mode::Low => {
                    // The controller's lateral estimate at low speed is the
                    // steady-state pair implied by the steering it is about
                    // to command, which realizes r_des exactly.
                    let (v_lo, r_lo) =
                        low_speed_lateral(z.u, r_des * (p.wheelbase() + p.understeer() * z.u * z.u) / z.u, p);
                    let z_eff = State6 { v: v_lo, r: r_lo, ..z };
                    let fx_total = fxf_command(&z_eff, u_des, du_des, &acc, g, b, p, 0.0);
                    let ex = extract_inputs(&z, fx_total, 0.0, p, ExtractMode::Low { r_des });
                    // At low speed the wheel loop holds the force demand
                    // itself; the recovered wheel speeds are what a
                    // downstream logger would record.
                    (Actuation { wheel: ex.cmd, fx_low: Some(fx_total) }, ex.saturated)
                }
            }
        };
        if saturated {
            saturated_holds += 1;
        }

        let stop_assist = if braking_to_stop { assist } else { 0.0 };
        for i in 0..n_sub {
            let t_i = t_k + i as f64 * timing.sim_dt;
            if t_i >= t_end - 1e-12 {
                break;
            }
            let StepReport { .. } = hybrid_step_aux(
                &mut z,
                &mut aux,
                &mut mode,
                &act,
                dist,
                t_i,
                timing.sim_dt,
                stop_assist,
                p,
                &aux_rhs,
            )?;
            let t_after = t_i + timing.sim_dt;
            if braking_to_stop && z.u == 0.0 && stopped_at.is_none() {
                stopped_at = Some(t_after);
            }
            let acc_now = TrackingAccumulators::from_array(aux);
            sink(RolloutSample { t: t_after, z: &z, mode, acc: &acc_now, cmd: act.wheel });
        }
    }

    Ok(RolloutResult {
        z,
        mode,
        acc: TrackingAccumulators::from_array(aux),
        stopped_at,
        saturated_holds,
    })
}

//! Flat `key = value` configuration files and the typed parameter records
//! shared by every pipeline stage.
//!
//! The file format is deliberately minimal: one numeric assignment per line,
//! `#` comments, nothing nested. Every tunable has a default, unknown keys are
//! rejected (they are almost always typos), and the resolved offline-relevant
//! entries are hashed so a reachable-set library can refuse to run against a
//! mismatched configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

/// Errors from parsing or validating a configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Could not read the file at all.
    Io(String),
    /// A line failed to parse as `key = number`.
    Parse { line: usize, msg: String },
    /// A key that no stage recognizes (catches typos early).
    UnknownKey(String),
    /// A value or combination of values violates a documented invariant.
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(msg) => write!(f, "config io error: {msg}"),
            ConfigError::Parse { line, msg } => write!(f, "config parse error on line {line}: {msg}"),
            ConfigError::UnknownKey(key) => write!(f, "unknown config key `{key}`"),
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parse flat `key = value` text into a map. Blank lines and `#` comments are
/// skipped; inline `#` comments after the value are allowed.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, f64>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::Parse { line: line_no, msg: "empty key".into() });
        }
        let parsed: f64 = value.parse().map_err(|_| ConfigError::Parse {
            line: line_no,
            msg: format!("`{value}` is not a number"),
        })?;
        map.insert(key.to_string(), parsed);
    }
    Ok(map)
}

/// Which axle(s) receive longitudinal drive torque.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drive {
    Front,
    Rear,
    All,
}

impl Drive {
    fn from_code(code: f64) -> Result<Self, ConfigError> {
        match code as i64 {
            0 => Ok(Drive::Front),
            1 => Ok(Drive::Rear),
            2 => Ok(Drive::All),
            other => Err(ConfigError::Invalid(format!(
                "vehicle.drive must be 0 (front), 1 (rear) or 2 (all), got {other}"
            ))),
        }
    }

    fn code(self) -> f64 {
        match self {
            Drive::Front => 0.0,
            Drive::Rear => 1.0,
            Drive::All => 2.0,
        }
    }
}

/// Physical vehicle parameters for the bicycle model with linear tires.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// Mass [kg].
    pub m: f64,
    /// Yaw moment of inertia [kg m²].
    pub izz: f64,
    /// Center of mass to front axle [m].
    pub lf: f64,
    /// Center of mass to rear axle [m].
    pub lr: f64,
    /// Wheel radius [m].
    pub rw: f64,
    /// Linear-regime surface adhesion slope (force = (m g l_x / l) · mu_bar · lambda).
    pub mu_bar: f64,
    /// Front cornering stiffness [N/rad].
    pub c_af: f64,
    /// Rear cornering stiffness [N/rad].
    pub c_ar: f64,
    /// Critical slip ratio bounding the linear tire regime.
    pub lambda_c: f64,
    /// Critical slip angle [rad] bounding the linear tire regime.
    pub alpha_c: f64,
    /// Speed threshold between the high- and low-speed models [m/s].
    pub u_crit: f64,
    /// Footprint length [m].
    pub length: f64,
    /// Footprint width [m].
    pub width: f64,
    /// Gravitational acceleration [m/s²].
    pub g: f64,
    /// Driven axle(s).
    pub drive: Drive,
}

impl VehicleParams {
    /// Wheelbase l = lf + lr.
    pub fn wheelbase(&self) -> f64 {
        self.lf + self.lr
    }

    /// Understeer coefficient used by the low-speed steering law:
    /// C_us = (m/l)(lr/c_af − lf/c_ar).
    pub fn understeer(&self) -> f64 {
        (self.m / self.wheelbase()) * (self.lr / self.c_af - self.lf / self.c_ar)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("vehicle.m", self.m),
            ("vehicle.izz", self.izz),
            ("vehicle.lf", self.lf),
            ("vehicle.lr", self.lr),
            ("vehicle.rw", self.rw),
            ("vehicle.mu_bar", self.mu_bar),
            ("vehicle.c_af", self.c_af),
            ("vehicle.c_ar", self.c_ar),
            ("vehicle.lambda_c", self.lambda_c),
            ("vehicle.alpha_c", self.alpha_c),
            ("vehicle.length", self.length),
            ("vehicle.width", self.width),
            ("vehicle.g", self.g),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::Invalid(format!("{name} must be positive, got {value}")));
            }
        }
        // The low-speed braking analysis needs headroom below u_crit down to
        // the 0.15 m/s mark where the disturbance envelope flattens.
        if !(self.u_crit > 0.15) {
            return Err(ConfigError::Invalid(format!(
                "vehicle.u_crit must exceed 0.15 m/s, got {}",
                self.u_crit
            )));
        }
        Ok(())
    }
}

/// Bounds on the unmodeled dynamics entering the u, v and r equations.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBounds {
    /// |Δu| ≤ m_u at speeds above u_crit [m/s²].
    pub m_u: f64,
    /// |Δv| ≤ m_v [m/s²].
    pub m_v: f64,
    /// |Δr| ≤ m_r [rad/s²].
    pub m_r: f64,
    /// Low-speed affine envelope slope: |Δu| ≤ b_pro·u + b_off.
    pub b_pro: f64,
    /// Low-speed affine envelope offset.
    pub b_off: f64,
}

impl ErrorBounds {
    fn validate(&self, vehicle: &VehicleParams) -> Result<(), ConfigError> {
        for (name, value) in [
            ("bounds.m_u", self.m_u),
            ("bounds.m_v", self.m_v),
            ("bounds.m_r", self.m_r),
            ("bounds.b_pro", self.b_pro),
            ("bounds.b_off", self.b_off),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ConfigError::Invalid(format!("{name} must be nonnegative, got {value}")));
            }
        }
        // The affine low-speed envelope must hand over to the constant
        // high-speed bound without a gap at the switching speed.
        let at_crit = self.b_pro * vehicle.u_crit + self.b_off;
        if at_crit > self.m_u + 1e-12 {
            return Err(ConfigError::Invalid(format!(
                "low-speed disturbance envelope exceeds m_u at u_crit: b_pro*u_crit + b_off = {at_crit} > m_u = {}",
                self.m_u
            )));
        }
        Ok(())
    }
}

/// Gains of the robust tracking controller.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    pub ku: f64,
    pub kh: f64,
    pub kr: f64,
    pub kappa1_u: f64,
    pub kappa2_u: f64,
    pub phi1_u: f64,
    pub phi2_u: f64,
    pub kappa1_r: f64,
    pub kappa2_r: f64,
    pub phi1_r: f64,
    pub phi2_r: f64,
}

impl ControllerGains {
    /// Speed-error trap radius u_small = m_u/(kappa1_u·m_u + phi1_u).
    ///
    /// Once |u − u_des| falls below this value it can no longer escape, which
    /// is what makes the guaranteed-stop time finite.
    pub fn u_small(&self, bounds: &ErrorBounds) -> f64 {
        bounds.m_u / (self.kappa1_u * bounds.m_u + self.phi1_u)
    }

    /// Residual forcing q_u = b_off²/(4(kappa1_u·m_u + phi1_u − b_pro)) from the
    /// low-speed disturbance envelope.
    pub fn q_u(&self, bounds: &ErrorBounds) -> f64 {
        bounds.b_off * bounds.b_off / (4.0 * (self.kappa1_u * bounds.m_u + self.phi1_u - bounds.b_pro))
    }

    /// Check the two braking-feasibility conditions that the guaranteed-stop
    /// bound requires: u_small ∈ (0.15, u_crit] and q_u < 0.15²·Ku.
    pub fn validate_braking(&self, bounds: &ErrorBounds, vehicle: &VehicleParams) -> Result<(), ConfigError> {
        let denom = self.kappa1_u * bounds.m_u + self.phi1_u - bounds.b_pro;
        if denom <= 0.0 {
            return Err(ConfigError::Invalid(format!(
                "braking infeasible: kappa1_u*m_u + phi1_u = {} must exceed b_pro = {}",
                self.kappa1_u * bounds.m_u + self.phi1_u,
                bounds.b_pro
            )));
        }
        let u_small = self.u_small(bounds);
        if !(u_small > 0.15 && u_small <= vehicle.u_crit) {
            return Err(ConfigError::Invalid(format!(
                "braking infeasible: u_small = {u_small} must lie in (0.15, u_crit = {}]",
                vehicle.u_crit
            )));
        }
        let q_u = self.q_u(bounds);
        let cap = 0.15 * 0.15 * self.ku;
        if !(q_u < cap) {
            return Err(ConfigError::Invalid(format!(
                "braking infeasible: q_u = {q_u} must be below 0.15^2*Ku = {cap}"
            )));
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("gains.ku", self.ku),
            ("gains.kh", self.kh),
            ("gains.kr", self.kr),
            ("gains.kappa1_u", self.kappa1_u),
            ("gains.kappa2_u", self.kappa2_u),
            ("gains.phi1_u", self.phi1_u),
            ("gains.phi2_u", self.phi2_u),
            ("gains.kappa1_r", self.kappa1_r),
            ("gains.kappa2_r", self.kappa2_r),
            ("gains.phi1_r", self.phi1_r),
            ("gains.phi2_r", self.phi2_r),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::Invalid(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }
}

/// Shared constants of the desired-trajectory families.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajConfig {
    /// Braking deceleration (< 0) [m/s²].
    pub a_max: f64,
    /// Planning budget per iteration [s].
    pub t_plan: f64,
    /// Driving-phase duration for speed changes [s].
    pub t_nb_speed: f64,
    /// Driving-phase duration for direction changes [s].
    pub t_nb_dir: f64,
    /// Driving-phase duration for lane changes [s].
    pub t_nb_lane: f64,
    /// Lane-change heading pulse amplitude shape constant.
    pub h1: f64,
    /// Lane-change heading pulse width shape constant.
    pub h2: f64,
    /// Desired-speed parameter range.
    pub p_u_min: f64,
    pub p_u_max: f64,
    /// Lateral/heading parameter magnitude bound.
    pub p_y_max: f64,
    /// Time to coast from u_crit to a full stop once commanded speed is zero [s].
    pub t_fstop: f64,
}

impl TrajConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.a_max < 0.0) {
            return Err(ConfigError::Invalid(format!("traj.a_max must be negative, got {}", self.a_max)));
        }
        for (name, t_nb) in [
            ("traj.t_nb_speed", self.t_nb_speed),
            ("traj.t_nb_dir", self.t_nb_dir),
            ("traj.t_nb_lane", self.t_nb_lane),
        ] {
            if !(t_nb > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive, got {t_nb}")));
            }
            if self.t_plan > t_nb {
                return Err(ConfigError::Invalid(format!(
                    "traj.t_plan = {} must not exceed {name} = {t_nb} (the next plan must be ready before the driving phase ends)",
                    self.t_plan
                )));
            }
        }
        if !(self.p_u_min < self.p_u_max) {
            return Err(ConfigError::Invalid("traj.p_u_min must be below traj.p_u_max".into()));
        }
        if !(self.p_y_max > 0.0) {
            return Err(ConfigError::Invalid("traj.p_y_max must be positive".into()));
        }
        if !(self.t_fstop >= 0.0) {
            return Err(ConfigError::Invalid("traj.t_fstop must be nonnegative".into()));
        }
        Ok(())
    }
}

/// How the initial-velocity and parameter boxes are carved into elements.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionConfig {
    /// Initial-speed range covered by the library.
    pub u0_min: f64,
    pub u0_max: f64,
    /// Number of equal u0 bins.
    pub u0_bins: usize,
    /// Width of each desired-speed bin (speed family).
    pub pu_bin: f64,
    /// Speed-change bins are built only when the bin center is within this
    /// distance of the initial-speed bin center (rules out untrackable ramps).
    pub pu_reach: f64,
    /// Width of each lateral-parameter bin (direction and lane families).
    pub py_bin: f64,
    /// Half-width of the initial lateral-speed box.
    pub v0_halfwidth: f64,
    /// Half-width of the initial yaw-rate box.
    pub r0_halfwidth: f64,
}

impl PartitionConfig {
    fn validate(&self, traj: &TrajConfig) -> Result<(), ConfigError> {
        if !(self.u0_min < self.u0_max) {
            return Err(ConfigError::Invalid("partition.u0_min must be below partition.u0_max".into()));
        }
        if self.u0_bins == 0 {
            return Err(ConfigError::Invalid("partition.u0_bins must be at least 1".into()));
        }
        for (name, value) in [
            ("partition.pu_bin", self.pu_bin),
            ("partition.pu_reach", self.pu_reach),
            ("partition.py_bin", self.py_bin),
            ("partition.v0_halfwidth", self.v0_halfwidth),
            ("partition.r0_halfwidth", self.r0_halfwidth),
        ] {
            if !(value > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive, got {value}")));
            }
        }
        if self.pu_reach < 0.5 * self.pu_bin {
            return Err(ConfigError::Invalid(
                "partition.pu_reach must be at least half of partition.pu_bin".into(),
            ));
        }
        if self.u0_min < traj.p_u_min || self.u0_max > traj.p_u_max {
            return Err(ConfigError::Invalid(
                "partition u0 range must lie within the desired-speed parameter range".into(),
            ));
        }
        Ok(())
    }
}

/// Reachability engine knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Time step of the stored reachable-set sequence [s].
    pub dt: f64,
    /// Generator cap during propagation (order reduction target).
    pub gen_cap: usize,
    /// Generator cap for stored sets (applied once per step after propagation).
    pub store_cap: usize,
    /// Interval-hull width cap; exceeding it rejects the partition element.
    pub hull_cap: f64,
}

impl EngineConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(ConfigError::Invalid(format!("engine.dt must be in (0, 0.1] s, got {}", self.dt)));
        }
        if self.gen_cap < 20 {
            return Err(ConfigError::Invalid("engine.gen_cap must be at least 20".into()));
        }
        if self.store_cap < 8 {
            return Err(ConfigError::Invalid("engine.store_cap must be at least 8".into()));
        }
        if !(self.hull_cap > 0.0) {
            return Err(ConfigError::Invalid("engine.hull_cap must be positive".into()));
        }
        Ok(())
    }
}

/// Online planner knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Number of deterministic multi-start seeds over the parameter box.
    pub n_starts: usize,
    /// Subgradient iterations per start.
    pub iters: usize,
    /// Infeasibility penalty weight.
    pub rho: f64,
    /// Feasibility margin: a parameter is safe only if every constraint value exceeds this.
    pub eps_feas: f64,
    /// Initial step size in normalized box coordinates.
    pub step0: f64,
    /// Extra buffer added around obstacle predictions [m].
    pub buffer: f64,
    /// Treat solver wall time beyond t_plan as infeasible (1) or just log it (0).
    pub enforce_deadline: bool,
    /// Waypoint lookahead distance as a multiple of u0·t_nb.
    pub lookahead_factor: f64,
}

impl PlannerConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.n_starts == 0 || self.iters == 0 {
            return Err(ConfigError::Invalid("planner.n_starts and planner.iters must be positive".into()));
        }
        if !(self.eps_feas > 0.0) {
            return Err(ConfigError::Invalid("planner.eps_feas must be positive".into()));
        }
        if !(self.buffer >= 0.0) {
            return Err(ConfigError::Invalid("planner.buffer must be nonnegative".into()));
        }
        if !(self.lookahead_factor > 0.0) {
            return Err(ConfigError::Invalid("planner.lookahead_factor must be positive".into()));
        }
        Ok(())
    }
}

/// Simulation-harness knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    /// Number of lanes.
    pub lanes: usize,
    /// Lane width [m].
    pub lane_width: f64,
    /// Goal distance along the road [m].
    pub goal: f64,
    /// Maximum number of moving obstacles per scenario.
    pub moving_max: usize,
    /// Maximum number of static obstacles per scenario.
    pub static_max: usize,
    /// Maximum obstacle speed [m/s].
    pub v_obs_max: f64,
    /// Ground-truth integration step [s].
    pub sim_dt: f64,
    /// Actuator command update rate [Hz] (zero-order hold between updates).
    pub hold_hz: f64,
    /// Collision-check sampling interval [s].
    pub check_dt: f64,
    /// Disturbance realization amplitude as a fraction of the modeled bounds.
    pub dist_scale: f64,
    /// Sensor radius [m]; validated against the planning-horizon inequality at startup.
    pub sensor_radius: f64,
    /// Initial ego speed range [m/s].
    pub ego_u0_min: f64,
    pub ego_u0_max: f64,
}

impl HarnessConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.lanes == 0 {
            return Err(ConfigError::Invalid("harness.lanes must be at least 1".into()));
        }
        for (name, value) in [
            ("harness.lane_width", self.lane_width),
            ("harness.goal", self.goal),
            ("harness.sim_dt", self.sim_dt),
            ("harness.hold_hz", self.hold_hz),
            ("harness.sensor_radius", self.sensor_radius),
        ] {
            if !(value > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.check_dt > 0.0 && self.check_dt <= 1e-2 + 1e-12) {
            return Err(ConfigError::Invalid(format!(
                "harness.check_dt must be in (0, 0.01] s for the not-at-fault checker, got {}",
                self.check_dt
            )));
        }
        if !(self.dist_scale >= 0.0 && self.dist_scale <= 1.0) {
            return Err(ConfigError::Invalid("harness.dist_scale must be in [0, 1]".into()));
        }
        if !(self.v_obs_max >= 0.0) {
            return Err(ConfigError::Invalid("harness.v_obs_max must be nonnegative".into()));
        }
        if !(self.ego_u0_min <= self.ego_u0_max) {
            return Err(ConfigError::Invalid("harness.ego_u0_min must not exceed harness.ego_u0_max".into()));
        }
        Ok(())
    }
}

/// The full resolved configuration: typed views plus the flat entry map they
/// were read from (defaults overlaid with file contents).
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub vehicle: VehicleParams,
    pub bounds: ErrorBounds,
    pub gains: ControllerGains,
    pub traj: TrajConfig,
    pub partition: PartitionConfig,
    pub engine: EngineConfig,
    pub planner: PlannerConfig,
    pub harness: HarnessConfig,
    entries: BTreeMap<String, f64>,
}

/// All known keys with their default values (a full-size front-wheel-drive
/// sedan on a three-lane highway).
fn default_entries() -> BTreeMap<String, f64> {
    let defaults: &[(&str, f64)] = &[
        ("vehicle.m", 1575.0),
        ("vehicle.izz", 2875.0),
        ("vehicle.lf", 1.13),
        ("vehicle.lr", 1.67),
        ("vehicle.rw", 0.33),
        ("vehicle.mu_bar", 10.0),
        ("vehicle.c_af", 1.4e5),
        ("vehicle.c_ar", 1.8e5),
        ("vehicle.lambda_c", 0.15),
        ("vehicle.alpha_c", 0.15),
        ("vehicle.u_crit", 0.5),
        ("vehicle.length", 4.8),
        ("vehicle.width", 2.0),
        ("vehicle.g", 9.81),
        ("vehicle.drive", 0.0),
        ("bounds.m_u", 0.25),
        ("bounds.m_v", 0.25),
        ("bounds.m_r", 0.10),
        ("bounds.b_pro", 0.20),
        ("bounds.b_off", 0.10),
        ("gains.ku", 4.0),
        ("gains.kh", 9.0),
        ("gains.kr", 6.0),
        ("gains.kappa1_u", 1.0),
        ("gains.kappa2_u", 0.2),
        ("gains.phi1_u", 0.375),
        ("gains.phi2_u", 0.2),
        ("gains.kappa1_r", 1.0),
        ("gains.kappa2_r", 0.2),
        ("gains.phi1_r", 0.5),
        ("gains.phi2_r", 0.2),
        ("traj.a_max", -5.0),
        ("traj.t_plan", 3.0),
        ("traj.t_nb_speed", 3.0),
        ("traj.t_nb_dir", 3.0),
        ("traj.t_nb_lane", 6.0),
        // Heading pulse shape: peak 6*sqrt(2e)/11, width 121/144.
        ("traj.h1", 6.0 * (2.0 * std::f64::consts::E).sqrt() / 11.0),
        ("traj.h2", 121.0 / 144.0),
        ("traj.p_u_min", 5.0),
        ("traj.p_u_max", 30.0),
        ("traj.p_y_max", 0.8),
        ("traj.t_fstop", 0.1),
        ("partition.u0_min", 5.0),
        ("partition.u0_max", 30.0),
        ("partition.u0_bins", 20.0),
        ("partition.pu_bin", 0.5),
        ("partition.pu_reach", 2.5),
        ("partition.py_bin", 0.4),
        ("partition.v0_halfwidth", 0.3),
        ("partition.r0_halfwidth", 0.15),
        ("engine.dt", 0.010),
        ("engine.gen_cap", 60.0),
        ("engine.store_cap", 14.0),
        ("engine.hull_cap", 1e4),
        ("planner.n_starts", 16.0),
        ("planner.iters", 50.0),
        ("planner.rho", 1e3),
        ("planner.eps_feas", 1e-6),
        ("planner.step0", 0.5),
        ("planner.buffer", 0.4),
        ("planner.enforce_deadline", 0.0),
        ("planner.lookahead_factor", 1.0),
        ("harness.lanes", 3.0),
        ("harness.lane_width", 3.7),
        ("harness.goal", 1000.0),
        ("harness.moving_max", 6.0),
        ("harness.static_max", 2.0),
        ("harness.v_obs_max", 25.0),
        ("harness.sim_dt", 1e-3),
        ("harness.hold_hz", 100.0),
        ("harness.check_dt", 0.01),
        ("harness.dist_scale", 0.7),
        ("harness.sensor_radius", 700.0),
        ("harness.ego_u0_min", 15.0),
        ("harness.ego_u0_max", 25.0),
    ];
    defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl Default for Config {
    fn default() -> Self {
        Config::from_entries(BTreeMap::new()).expect("defaults must validate")
    }
}

impl Config {
    /// Resolve a configuration from file entries overlaid on the defaults.
    pub fn from_entries(overrides: BTreeMap<String, f64>) -> Result<Self, ConfigError> {
        let mut entries = default_entries();
        for (key, value) in overrides {
            if !entries.contains_key(&key) {
                return Err(ConfigError::UnknownKey(key));
            }
            entries.insert(key, value);
        }
        let get = |key: &str| -> f64 { *entries.get(key).expect("all keys defaulted") };
        let get_count = |key: &str| -> Result<usize, ConfigError> {
            let v = get(key);
            if v.fract() != 0.0 || v < 0.0 || v > 1e9 {
                return Err(ConfigError::Invalid(format!("{key} must be a nonnegative integer, got {v}")));
            }
            Ok(v as usize)
        };

        let vehicle = VehicleParams {
            m: get("vehicle.m"),
            izz: get("vehicle.izz"),
            lf: get("vehicle.lf"),
            lr: get("vehicle.lr"),
            rw: get("vehicle.rw"),
            mu_bar: get("vehicle.mu_bar"),
            c_af: get("vehicle.c_af"),
            c_ar: get("vehicle.c_ar"),
            lambda_c: get("vehicle.lambda_c"),
            alpha_c: get("vehicle.alpha_c"),
            u_crit: get("vehicle.u_crit"),
            length: get("vehicle.length"),
            width: get("vehicle.width"),
            g: get("vehicle.g"),
            drive: Drive::from_code(get("vehicle.drive"))?,
        };
        let bounds = ErrorBounds {
            m_u: get("bounds.m_u"),
            m_v: get("bounds.m_v"),
            m_r: get("bounds.m_r"),
            b_pro: get("bounds.b_pro"),
            b_off: get("bounds.b_off"),
        };
        let gains = ControllerGains {
            ku: get("gains.ku"),
            kh: get("gains.kh"),
            kr: get("gains.kr"),
            kappa1_u: get("gains.kappa1_u"),
            kappa2_u: get("gains.kappa2_u"),
            phi1_u: get("gains.phi1_u"),
            phi2_u: get("gains.phi2_u"),
            kappa1_r: get("gains.kappa1_r"),
            kappa2_r: get("gains.kappa2_r"),
            phi1_r: get("gains.phi1_r"),
            phi2_r: get("gains.phi2_r"),
        };
        let traj = TrajConfig {
            a_max: get("traj.a_max"),
            t_plan: get("traj.t_plan"),
            t_nb_speed: get("traj.t_nb_speed"),
            t_nb_dir: get("traj.t_nb_dir"),
            t_nb_lane: get("traj.t_nb_lane"),
            h1: get("traj.h1"),
            h2: get("traj.h2"),
            p_u_min: get("traj.p_u_min"),
            p_u_max: get("traj.p_u_max"),
            p_y_max: get("traj.p_y_max"),
            t_fstop: get("traj.t_fstop"),
        };
        let partition = PartitionConfig {
            u0_min: get("partition.u0_min"),
            u0_max: get("partition.u0_max"),
            u0_bins: get_count("partition.u0_bins")?,
            pu_bin: get("partition.pu_bin"),
            pu_reach: get("partition.pu_reach"),
            py_bin: get("partition.py_bin"),
            v0_halfwidth: get("partition.v0_halfwidth"),
            r0_halfwidth: get("partition.r0_halfwidth"),
        };
        let engine = EngineConfig {
            dt: get("engine.dt"),
            gen_cap: get_count("engine.gen_cap")?,
            store_cap: get_count("engine.store_cap")?,
            hull_cap: get("engine.hull_cap"),
        };
        let planner = PlannerConfig {
            n_starts: get_count("planner.n_starts")?,
            iters: get_count("planner.iters")?,
            rho: get("planner.rho"),
            eps_feas: get("planner.eps_feas"),
            step0: get("planner.step0"),
            buffer: get("planner.buffer"),
            enforce_deadline: get("planner.enforce_deadline") != 0.0,
            lookahead_factor: get("planner.lookahead_factor"),
        };
        let harness = HarnessConfig {
            lanes: get_count("harness.lanes")?,
            lane_width: get("harness.lane_width"),
            goal: get("harness.goal"),
            moving_max: get_count("harness.moving_max")?,
            static_max: get_count("harness.static_max")?,
            v_obs_max: get("harness.v_obs_max"),
            sim_dt: get("harness.sim_dt"),
            hold_hz: get("harness.hold_hz"),
            check_dt: get("harness.check_dt"),
            dist_scale: get("harness.dist_scale"),
            sensor_radius: get("harness.sensor_radius"),
            ego_u0_min: get("harness.ego_u0_min"),
            ego_u0_max: get("harness.ego_u0_max"),
        };

        vehicle.validate()?;
        bounds.validate(&vehicle)?;
        gains.validate()?;
        gains.validate_braking(&bounds, &vehicle)?;
        traj.validate()?;
        partition.validate(&traj)?;
        engine.validate()?;
        planner.validate()?;
        harness.validate()?;

        Ok(Config {
            vehicle,
            bounds,
            gains,
            traj,
            partition,
            engine,
            planner,
            harness,
            entries,
        })
    }

    /// Parse configuration text (defaults overlaid with the given entries).
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        Config::from_entries(parse_flat(text)?)
    }

    /// Load a configuration file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Config::from_text(&text)
    }

    /// Override a single entry and re-validate (used by CLI flags like `--dt`).
    pub fn with_override(&self, key: &str, value: f64) -> Result<Self, ConfigError> {
        let mut entries = self.entries.clone();
        if !entries.contains_key(key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        entries.insert(key.to_string(), value);
        Config::from_entries(entries)
    }

    /// The resolved flat entries (defaults overlaid with file contents).
    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    /// SHA-256 over the offline-relevant entries in sorted order. Two configs
    /// with the same hash produce bit-identical reachable-set libraries, so
    /// the online stage refuses a library whose hash disagrees.
    pub fn param_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for (key, value) in &self.entries {
            let offline = key.starts_with("vehicle.")
                || key.starts_with("bounds.")
                || key.starts_with("gains.")
                || key.starts_with("traj.")
                || key.starts_with("partition.")
                || key.starts_with("engine.");
            if offline {
                // Debug formatting of f64 is the shortest round-trip decimal,
                // so equal bit patterns hash equally on every platform.
                hasher.update(format!("{key}={value:?}\n").as_bytes());
            }
        }
        hasher.finalize().into()
    }

    /// Hex form of `param_hash` for logs and reports.
    pub fn param_hash_hex(&self) -> String {
        self.param_hash().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_flat_basics() {
        let text = "\n# comment\n a = 1.5 \nb=2 # trailing\nc.d = -3e-2\n";
        let map = parse_flat(text).unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map["a"], 1.5);
        assert_eq!(map["b"], 2.0);
        assert_eq!(map["c.d"], -3e-2);
    }

    #[test]
    fn parse_flat_rejects_garbage() {
        let err = parse_flat("a = not_a_number").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
        let err = parse_flat("just words").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
    }

    #[test]
    fn defaults_validate_and_braking_conditions_hold() {
        let cfg = Config::default();
        // u_small = 0.25/(1.0*0.25 + 0.375) = 0.4, inside (0.15, 0.5].
        let u_small = cfg.gains.u_small(&cfg.bounds);
        assert!((u_small - 0.4).abs() < 1e-12);
        assert!(u_small > 0.15 && u_small <= cfg.vehicle.u_crit);
        // q_u = 0.1^2/(4*(0.625-0.2)) ≈ 5.88e-3 < 0.15^2*4 = 0.09.
        let q_u = cfg.gains.q_u(&cfg.bounds);
        assert!(q_u < 0.15 * 0.15 * cfg.gains.ku);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = Config::from_text("vehicle.mass = 10").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("vehicle.mass".into()));
    }

    #[test]
    fn invariant_violations_rejected() {
        // Low-speed disturbance envelope must not exceed m_u at u_crit.
        assert!(matches!(
            Config::from_text("bounds.b_off = 0.2").unwrap_err(),
            ConfigError::Invalid(_)
        ));
        // Braking feasibility: drive u_small out of (0.15, u_crit].
        assert!(matches!(
            Config::from_text("gains.phi1_u = 2.0").unwrap_err(),
            ConfigError::Invalid(_)
        ));
        // t_plan beyond the driving phase.
        assert!(matches!(
            Config::from_text("traj.t_plan = 4.0").unwrap_err(),
            ConfigError::Invalid(_)
        ));
        // Positive braking "deceleration".
        assert!(matches!(
            Config::from_text("traj.a_max = 1.0").unwrap_err(),
            ConfigError::Invalid(_)
        ));
    }

    #[test]
    fn hash_tracks_offline_keys_only() {
        let base = Config::default();
        let same = base.with_override("harness.goal", 500.0).unwrap();
        assert_eq!(base.param_hash(), same.param_hash());
        let planner = base.with_override("planner.buffer", 0.5).unwrap();
        assert_eq!(base.param_hash(), planner.param_hash());
        let diff = base.with_override("vehicle.m", 1600.0).unwrap();
        assert_ne!(base.param_hash(), diff.param_hash());
        let dt = base.with_override("engine.dt", 0.005).unwrap();
        assert_ne!(base.param_hash(), dt.param_hash());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("test.cfg");
        std::fs::write(&path, "engine.dt = 0.005\nvehicle.m = 1600\n").unwrap();
        let cfg = Config::load(&path).unwrap();
        assert_eq!(cfg.engine.dt, 0.005);
        assert_eq!(cfg.vehicle.m, 1600.0);
        // Untouched keys keep their defaults.
        assert_eq!(cfg.vehicle.izz, 2875.0);
    }

    #[test]
    fn understeer_coefficient_value() {
        let cfg = Config::default();
        let expected = (1575.0 / 2.8) * (1.67 / 1.4e5 - 1.13 / 1.8e5);
        assert!((cfg.vehicle.understeer() - expected).abs() < 1e-15);
        assert!(cfg.vehicle.understeer() > 0.0, "defaults describe an understeering car");
    }
}

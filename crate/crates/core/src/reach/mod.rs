//! Offline reachability for the tracked maneuver families.
//!
//! The planner's safety argument rests on a library of forward reachable
//! sets (FRS): for every maneuver family and every cell of a partition over
//! initial velocity and maneuver parameters, a sequence of zonotopes that
//! contains the closed-loop vehicle state over consecutive time windows, for
//! every initial condition in the cell, every admissible parameter, and every
//! disturbance inside the model's error bounds.
//!
//! The augmented state tracked here stacks the moving vehicle state with the
//! (constant) initial velocity and the maneuver parameters, so that one set
//! family covers the whole cell and can later be *sliced* down to the
//! measured initial condition online. Position starts at the origin: the
//! planner transforms obstacles into the maneuver frame instead.
//!
//! Submodules:
//! - [`partition`]: cell decomposition of the initial-condition/parameter box;
//! - [`engine`]: the conservative linearization engine that builds the sets;
//! - [`sets`]: slicing, footprint inflation, and the occupancy map;
//! - [`slip`]: offline verification that commanded slip stays in the linear
//!   tire region;
//! - [`library`]: the versioned on-disk container.

pub mod engine;
pub mod library;
pub mod partition;
pub mod sets;
pub mod slip;

pub use engine::{build_frs, BuiltElement};
pub use library::{load_library, save_library, FrsElement, FrsLibrary, LibraryHeader};
pub use partition::{build_partition, PartitionElement};
pub use sets::{footprint_inflation, xi, FrsZonotope};
pub use slip::{verify_slip, SlipReport, SlipRow};

/// Dimension layout of the augmented state.
///
/// The first six entries are the moving vehicle state; the next five are
/// frozen copies of the initial velocity and the maneuver parameters (zero
/// dynamics, so each stays pinned to its initial box). The extended layout
/// used while building appends the three tracking accumulators.
pub mod dims {
    /// Planar position and heading in the maneuver frame.
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const H: usize = 2;
    /// Body-frame velocity state.
    pub const U: usize = 3;
    pub const V: usize = 4;
    pub const R: usize = 5;
    /// Initial velocity copies (zero dynamics).
    pub const U0: usize = 6;
    pub const V0: usize = 7;
    pub const R0: usize = 8;
    /// Maneuver parameters (zero dynamics).
    pub const PU: usize = 9;
    pub const PY: usize = 10;
    /// Tracking accumulators (extended layout only).
    pub const EU: usize = 11;
    pub const ER: usize = 12;
    pub const EH: usize = 13;

    /// Stored augmented-state dimension.
    pub const AUG: usize = 11;
    /// Extended dimension during construction (accumulators appended).
    pub const EXT: usize = 14;
    /// The dimensions a slice pins, in layout order.
    pub const SLICE_DIMS: [usize; 5] = [U0, V0, R0, PU, PY];
    /// Number of sliceable generators (one per pinned dimension).
    pub const N_SLICE: usize = 5;
}

/// Failures while building, slicing, verifying, or persisting reachable sets.
#[derive(Debug, Clone, PartialEq)]
pub enum ReachError {
    /// The a-priori enclosure iteration failed to close within its budget;
    /// the cell is too coarse (or the step too long) for the linearization.
    EnclosureDiverged { step: usize, t: f64 },
    /// A state interval grew past the configured cap; the cell is rejected
    /// and a finer partition is needed.
    HullBlowup {
        step: usize,
        t: f64,
        dim: usize,
        width: f64,
    },
    /// The set never reached the stopped regime within the time budget.
    NoCapture { t_budget: f64 },
    /// A slice was requested outside the cell's box (coefficient beyond ±1).
    SliceOutOfBox { dim: usize, coeff: f64 },
    /// A slice pinned a degenerate dimension away from its only value.
    SliceOffPoint { dim: usize, offset: f64 },
    /// Heading spread too wide for a sound footprint box.
    HeadingSpread { h_rad: f64 },
    /// High-speed tire formulas would divide by a speed interval touching 0.
    SpeedIntervalDegenerate { step: usize, lo: f64 },
}

impl std::fmt::Display for ReachError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReachError::EnclosureDiverged { step, t } => {
                write!(f, "a-priori enclosure diverged at step {step} (t = {t:.3} s); refine the partition or shorten the step")
            }
            ReachError::HullBlowup { step, t, dim, width } => {
                write!(f, "state dimension {dim} grew to width {width:.3} at step {step} (t = {t:.3} s); refine the partition")
            }
            ReachError::NoCapture { t_budget } => {
                write!(f, "set failed to reach the stopped regime within {t_budget:.2} s")
            }
            ReachError::SliceOutOfBox { dim, coeff } => {
                write!(f, "slice coefficient {coeff:.6} for dimension {dim} is outside [-1, 1]")
            }
            ReachError::SliceOffPoint { dim, offset } => {
                write!(f, "slice value for degenerate dimension {dim} is off by {offset:.3e}")
            }
            ReachError::HeadingSpread { h_rad } => {
                write!(f, "heading spread {h_rad:.3} rad is too wide for a footprint box (≥ π/2)")
            }
            ReachError::SpeedIntervalDegenerate { step, lo } => {
                write!(f, "speed interval reaches {lo:.3} ≤ 0 in a high-speed window at step {step}")
            }
        }
    }
}

impl std::error::Error for ReachError {}

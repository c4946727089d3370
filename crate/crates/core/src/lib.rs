//! Safe trajectory design for a hybrid vehicle model.
//!
//! The crate is organized as a pipeline:
//!
//! * [`geom`] — interval and zonotope kernels.
//! * [`config`] — flat key/value parameter files and typed parameter records.
//! * [`vehicle`] — tire model, disturbed rigid-body dynamics, hybrid
//!   high/low-speed switching, and ground-truth simulation.
//! * [`control`] — the robust tracking controller, wheel/steering input
//!   extraction, and the guaranteed stopping-time bound.
//! * [`traj`] — parameterized reference trajectory families (speed change,
//!   direction change, lane change) with exact range evaluation.
//! * [`reach`] — offline construction of parameterized forward reachable
//!   sets with sliceable-generator bookkeeping, footprint inflation, slip
//!   verification, and the persisted library format.
//! * [`plan`] — online receding-horizon parameter selection against
//!   predicted obstacles with not-at-fault guarantees.
//! * [`harness`] — randomized highway scenarios, ground-truth rollouts,
//!   collision checking, and batch reporting.

pub mod config;
pub mod control;
pub mod geom;
pub mod traj;
pub mod vehicle;

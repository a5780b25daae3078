//! Interaction-aware scene estimation and combinatorial trajectory
//! prediction for road agents.
//!
//! A scene is a joint hypothesis over every agent's kinematic state, route,
//! passing-order maneuver and action. A particle filter tracks the belief
//! over scenes from noisy measurements, and one deterministic multi-agent
//! rollout per intention combination turns the belief into a weighted
//! prediction set.
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the
//! command line live in the companion `scene-forecaster` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod behavior;
pub mod config;
pub mod context;
pub mod evaluation;
pub mod forecast;
pub mod geometry;
pub mod inference;
pub mod intent;
pub mod kinematics;
pub mod lanegraph;
pub mod math;
pub mod scenario;

pub use kinematics::{Action, AgentId, KinematicState, Measurement, NoiseConfig};
pub use lanegraph::{LaneGraph, LaneIdx, MapError, MapSpec, RoutePath};

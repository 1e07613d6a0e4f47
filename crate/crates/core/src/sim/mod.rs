//! Deterministic headless simulator: worlds, raycast sensing, grid-based
//! global waypoints, the local planning loop, and closed-loop episodes.
//!
//! Everything in an episode is a pure function of the world, the configs,
//! and the seed; replaying with identical inputs reproduces the trace byte
//! for byte. Wall-clock stage timings are collected alongside but never
//! enter the trace.

mod episode;
mod grid;
mod planner;
mod world;
mod worldgen;

pub use episode::{run_episode, EpisodeConfig, Outcome, RunResult, StageTimings, TraceEvent};
pub use grid::{global_waypoint, OccupancyGrid};
pub use planner::{LocalPlanner, Plan, PlanRegion, PlannerConfig};
pub use world::{
    check_collision, raycast_scan, step_robot, Bounds, Obstacle, RobotModel, RobotOrder,
    RobotState, ScanMemory, SensorConfig, World,
};
pub use worldgen::{generate_world, WorldKind};

use thiserror::Error;

/// Failures constructing simulator inputs. Episode-level failures are
/// outcomes, not errors.
#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("sensor configuration invalid: {0}")]
    BadSensor(&'static str),
    #[error("robot model invalid: {0}")]
    BadRobot(&'static str),
    #[error("start or goal is in collision")]
    InvalidEndpoints,
    #[error("obstacle density infeasible: placed {placed} of {target}")]
    DensityInfeasible { placed: usize, target: usize },
}

//! World model and physics: obstacles, raycast range sensing with a
//! configurable field of view, a persistent scan memory for limited-FoV
//! sensors, first/second-order unicycle stepping, and collision checks.
//!
//! Scans are produced in a robot-centered, world-aligned frame: beam
//! bearings are world bearings starting at -pi, and the sensed field of
//! view is the window of bearings centered on the robot heading.  A
//! limited-FoV scan is embedded into that full circle with out-of-view
//! beams set to the maximum range.

use super::SimError;
use crate::geometry::{
    cross, rotate, wrap_angle, ConvexPolygon, Disc, EgoCircle, Pose2, Segment, Twist, Vec2,
};
use crate::nmpc::unicycle_step;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Shortest representable scan return; raycasts never report less so the
/// scan invariant (all ranges positive) holds even on top of an obstacle.
const MIN_RANGE: f64 = 1e-3;

/// Axis-aligned rectangular world boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed membership.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Distance from an interior point to the nearest wall (negative
    /// outside).
    pub fn wall_clearance(&self, p: Vec2) -> f64 {
        (p.x - self.min.x)
            .min(self.max.x - p.x)
            .min(p.y - self.min.y)
            .min(self.max.y - p.y)
    }

    /// The four boundary walls as segments.
    pub fn walls(&self) -> [Segment; 4] {
        let a = self.min;
        let b = Vec2::new(self.max.x, self.min.y);
        let c = self.max;
        let d = Vec2::new(self.min.x, self.max.y);
        [
            Segment { a, b },
            Segment { a: b, b: c },
            Segment { a: c, b: d },
            Segment { a: d, b: a },
        ]
    }
}

/// A static obstacle: a disc or a convex polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum Obstacle {
    Disc(Disc),
    Polygon(ConvexPolygon),
}

impl Obstacle {
    /// Distance from a point to the obstacle; zero on or inside it.
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        match self {
            Obstacle::Disc(d) => ((p - d.center).norm() - d.radius).max(0.0),
            Obstacle::Polygon(poly) => poly.distance_to_point(p),
        }
    }
}

/// A static 2D world: rectangular bounds, obstacles, and the episode's
/// start pose and goal position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub bounds: Bounds,
    pub obstacles: Vec<Obstacle>,
    pub start: Pose2,
    pub goal: Vec2,
}

impl World {
    /// Rejects worlds whose start or goal a robot of the given radius
    /// could never occupy.
    pub fn validate(&self, robot_radius: f64) -> Result<(), SimError> {
        if check_collision(self, self.start.position(), robot_radius)
            || check_collision(self, self.goal, robot_radius)
        {
            return Err(SimError::InvalidEndpoints);
        }
        Ok(())
    }
}

/// Kinematic order of the robot model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotOrder {
    /// Commands are velocities, reached instantly (after clamping).
    First,
    /// Commands are velocities approached at a bounded rate.
    Second,
}

/// Circular unicycle robot: kinematic order, footprint radius, velocity
/// box, and (for the second-order model) symmetric acceleration bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub order: RobotOrder,
    pub radius: f64,
    /// Lower velocity bounds (reverse speed, clockwise yaw rate).
    pub v_lb: Twist,
    /// Upper velocity bounds.
    pub v_ub: Twist,
    /// Per-second limits on |velocity change| for the second-order model.
    pub a_ub: Twist,
}

impl Default for RobotModel {
    fn default() -> Self {
        Self {
            order: RobotOrder::First,
            radius: 0.2,
            v_lb: Twist { v: -0.2, w: -2.0 },
            v_ub: Twist { v: 1.0, w: 2.0 },
            a_ub: Twist { v: 4.0, w: 12.0 },
        }
    }
}

impl RobotModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.radius > 0.0) {
            return Err(SimError::BadRobot("radius must be positive"));
        }
        if !(self.v_lb.v < self.v_ub.v && self.v_lb.w < self.v_ub.w) {
            return Err(SimError::BadRobot("velocity bounds must be ordered"));
        }
        if !(self.a_ub.v > 0.0 && self.a_ub.w > 0.0) {
            return Err(SimError::BadRobot("acceleration bounds must be positive"));
        }
        Ok(())
    }

    /// The command box applied before integration.
    fn clamp(&self, cmd: Twist) -> Twist {
        Twist {
            v: cmd.v.clamp(self.v_lb.v, self.v_ub.v),
            w: cmd.w.clamp(self.v_lb.w, self.v_ub.w),
        }
    }
}

/// Full robot state: pose plus realized body velocities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2,
    pub vel: Twist,
}

/// Range sensor: `n_beams` bearings spanning `fov` centered on the robot
/// heading (plus the mount yaw), clipped at `max_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub n_beams: usize,
    /// Field of view in radians, at most a full circle.
    pub fov: f64,
    pub max_range: f64,
    /// Sensor pose in the robot body frame (zero when mounted at center).
    pub mount_offset: Pose2,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            n_beams: 360,
            fov: 2.0 * PI,
            max_range: 5.0,
            mount_offset: Pose2 { x: 0.0, y: 0.0, theta: 0.0 },
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_beams < 8 {
            return Err(SimError::BadSensor("fewer than 8 beams"));
        }
        if !(self.fov > 0.0 && self.fov <= 2.0 * PI + 1e-12) {
            return Err(SimError::BadSensor("fov must lie in (0, 2pi]"));
        }
        if !(self.max_range > 0.0) {
            return Err(SimError::BadSensor("max range must be positive"));
        }
        Ok(())
    }

    /// Angular spacing between adjacent beams.
    pub fn angle_increment(&self) -> f64 {
        self.fov / self.n_beams as f64
    }

    /// Beam count of the full egocircle the scan is embedded into.
    pub fn full_beam_count(&self) -> usize {
        (2.0 * PI / self.angle_increment()).round() as usize
    }

    /// Whether a world bearing falls inside the sensed window for a robot
    /// heading.
    fn in_fov(&self, bearing: f64, heading: f64) -> bool {
        if self.fov >= 2.0 * PI - 1e-9 {
            return true;
        }
        let center = heading + self.mount_offset.theta;
        wrap_angle(bearing - center).abs() <= 0.5 * self.fov + 1e-9
    }
}

/// First positive ray parameter at which `origin + t*dir` meets the disc.
fn ray_disc(origin: Vec2, dir: Vec2, disc: &Disc) -> Option<f64> {
    let f = origin - disc.center;
    let b = f.dot(&dir);
    let c = f.dot(&f) - disc.radius * disc.radius;
    let det = b * b - c;
    if det < 0.0 {
        return None;
    }
    let root = det.sqrt();
    let t_near = -b - root;
    if t_near >= 0.0 {
        Some(t_near)
    } else {
        let t_far = -b + root;
        (t_far >= 0.0).then_some(t_far)
    }
}

/// First positive ray parameter at which `origin + t*dir` meets the
/// segment `a`..`b`.
fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let denom = cross(dir, e);
    if denom.abs() < 1e-12 {
        return None;
    }
    let ao = a - origin;
    let t = cross(ao, e) / denom;
    let s = cross(ao, dir) / denom;
    (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s)).then_some(t)
}

/// Nearest hit distance of a world ray against every obstacle and the
/// boundary walls, clipped to `max_range`.
fn cast_ray(w: &World, origin: Vec2, bearing: f64, max_range: f64) -> f64 {
    let dir = Vec2::new(bearing.cos(), bearing.sin());
    let mut t_min = max_range;
    for wall in w.bounds.walls() {
        if let Some(t) = ray_segment(origin, dir, wall.a, wall.b) {
            t_min = t_min.min(t);
        }
    }
    for obs in &w.obstacles {
        match obs {
            Obstacle::Disc(d) => {
                if let Some(t) = ray_disc(origin, dir, d) {
                    t_min = t_min.min(t);
                }
            }
            Obstacle::Polygon(poly) => {
                for (a, b) in poly.edges() {
                    if let Some(t) = ray_segment(origin, dir, a, b) {
                        t_min = t_min.min(t);
                    }
                }
            }
        }
    }
    t_min.max(MIN_RANGE)
}

/// Simulated range scan in the robot-centered world-aligned frame: a full
/// egocircle whose in-view beams carry raycast hits and whose out-of-view
/// beams read `max_range`.
pub fn raycast_scan(w: &World, pose: &Pose2, s: &SensorConfig) -> EgoCircle {
    let origin =
        pose.position() + rotate(s.mount_offset.position(), pose.theta);
    let inc = s.angle_increment();
    let n = s.full_beam_count();
    let mut ranges = Vec::with_capacity(n);
    for k in 0..n {
        let bearing = -PI + k as f64 * inc;
        let r = if s.in_fov(bearing, pose.theta) {
            cast_ray(w, origin, bearing, s.max_range)
        } else {
            s.max_range
        };
        ranges.push(r);
    }
    EgoCircle::new(-PI, inc, s.max_range, ranges).expect("raycast produces a valid scan")
}

/// Free-space credit granted to a bearing the sensor has never swept:
/// enough to keep planning alive near spawn, small enough that a region
/// built over unexplored directions cannot reach geometry the scan has
/// no evidence about (obstacles spawn with 1 m mutual clearance).
const UNSEEN_RANGE: f64 = 0.6;

/// Episode-persistent conservative memory for limited-FoV sensing.
///
/// Obstacle returns are remembered as world points, immutable while out of
/// view, and rendered onto the robot's current position every update — so
/// geometry seen once stays known at its exact world location until the
/// sensor looks that way again. Storing ranges per bearing instead would
/// re-quantize every point to the beam grid each cycle; those errors
/// random-walk, and merging by minimum biases the walk inward, so
/// remembered surfaces would slowly creep toward the robot. Bearings
/// inside the current view always reflect the fresh scan (including
/// max-range clearing): their remembered points are dropped and re-seeded
/// from the fresh returns. Bearings the sensor has never covered are
/// capped at a short range instead of reading as open: claiming deep free
/// space in directions never looked at lets the planner certify regions
/// across geometry nothing has ever measured.
#[derive(Debug, Clone, Default)]
pub struct ScanMemory {
    /// Remembered obstacle returns in world coordinates.
    points: Vec<Vec2>,
    /// Centimeter-quantized occupancy of `points`, for deduplication.
    occupied: std::collections::HashSet<(i64, i64)>,
    /// Per-bearing flag: has this world bearing ever been inside the
    /// sensed field of view?
    seen: Vec<bool>,
}

impl ScanMemory {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(p: Vec2) -> (i64, i64) {
        ((p.x * 100.0).floor() as i64, (p.y * 100.0).floor() as i64)
    }

    /// Folds a fresh scan (taken at `pose`) into memory and returns the
    /// merged full-circle scan centered on the robot.
    pub fn update(&mut self, fresh: &EgoCircle, pose: &Pose2, sensor: &SensorConfig) -> EgoCircle {
        let n = fresh.n_beams();
        let pos = pose.position();
        if self.seen.len() != n {
            self.seen = vec![false; n];
        }
        // Fresh data supersedes memory over the whole view: points whose
        // current bearing is in the field of view are dropped (clearing
        // stale geometry) and the fresh returns re-seed them.
        let occupied = &mut self.occupied;
        self.points.retain(|p| {
            let d = p - pos;
            if sensor.in_fov(d.y.atan2(d.x), pose.theta) {
                occupied.remove(&Self::key(*p));
                false
            } else {
                true
            }
        });
        for i in 0..n {
            if !sensor.in_fov(fresh.beam_angle(i), pose.theta) {
                continue;
            }
            self.seen[i] = true;
            if fresh.is_max_range(i) {
                continue;
            }
            let p = pos + fresh.beam_point(i);
            if self.occupied.insert(Self::key(p)) {
                self.points.push(p);
            }
        }
        // Render the merged view: remembered points binned to the nearest
        // beam, fresh beams verbatim, never-seen bearings capped.
        let mut merged = vec![fresh.max_range; n];
        for p in &self.points {
            let d = p - pos;
            let rr = d.norm();
            if rr >= fresh.max_range - 1e-9 || rr < 1e-6 {
                continue;
            }
            let t = (d.y.atan2(d.x) - fresh.angle_min) / fresh.angle_increment;
            let j = (t.round() as i64).rem_euclid(n as i64) as usize;
            merged[j] = merged[j].min(rr.max(MIN_RANGE));
        }
        for i in 0..n {
            if sensor.in_fov(fresh.beam_angle(i), pose.theta) {
                merged[i] = fresh.ranges[i];
            } else if !self.seen[i] {
                merged[i] = merged[i].min(UNSEEN_RANGE);
            }
        }
        EgoCircle::new(fresh.angle_min, fresh.angle_increment, fresh.max_range, merged)
            .expect("memory preserves scan validity")
    }
}

/// Advances the robot by one physics step under a velocity command.
///
/// First order: the command is clamped into the velocity box and applied
/// directly. Second order: the realized velocity moves toward the clamped
/// command at the model's acceleration limit (reaching it exactly when
/// within one step's reach, so an unbounded-acceleration second-order
/// model reproduces the first-order traces bit for bit). Both then take
/// one Euler pose step.
pub fn step_robot(state: &RobotState, cmd: Twist, dt: f64, model: &RobotModel) -> RobotState {
    let target = model.clamp(cmd);
    let vel = match model.order {
        RobotOrder::First => target,
        RobotOrder::Second => {
            let approach = |cur: f64, want: f64, rate: f64| {
                let dv = want - cur;
                let max_dv = rate * dt;
                if dv.abs() <= max_dv {
                    want
                } else {
                    cur + max_dv * dv.signum()
                }
            };
            Twist {
                v: approach(state.vel.v, target.v, model.a_ub.v),
                w: approach(state.vel.w, target.w, model.a_ub.w),
            }
        }
    };
    RobotState { pose: unicycle_step(state.pose, vel, dt), vel }
}

/// True when a robot disc of the given radius at `position` touches an
/// obstacle or leaves the bounds: obstacle distance strictly below the
/// radius, or wall clearance strictly below the radius.
pub fn check_collision(w: &World, position: Vec2, radius: f64) -> bool {
    if w.bounds.wall_clearance(position) < radius {
        return true;
    }
    w.obstacles.iter().any(|o| o.distance_to_point(position) < radius)
}

//! Joined Bézier path synthesis inside an inflated keyhole.
//!
//! A path has a cubic head that absorbs the robot's current velocity and
//! acceleration and ends on the inflated circle's gap-facing arc, and an
//! optional quadratic tail that continues through the polygon to the local
//! goal with matched tangents at the junction. Because each segment's
//! control points are confined to a convex piece of the keyhole (cubic in
//! the circle, quadratic in the polygon), the convex-hull property keeps
//! the whole path inside the free region; synthesis rejects any candidate
//! whose control points escape rather than returning an uncertified path.
//!
//! Candidate paths are scored by obstacle proximity plus terminal goal and
//! heading terms, and selection applies hysteresis against the previously
//! executed path.

use crate::gaps::InflatedKeyhole;
use crate::geometry::{wrap_angle, EgoCircle, Pose2, Vec2, EPS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BezierError {
    #[error("local goal lies outside the inflated keyhole")]
    GoalOutsideRegion,
    #[error("gap-facing arc is degenerate")]
    DegenerateArc,
    #[error("segment target coincides with its start")]
    ZeroLengthSegment,
    #[error("tangent direction undefined at the junction")]
    UndefinedDirection,
    #[error("no positive length scale keeps the quadratic inside the polygon")]
    NoValidLengthScale,
    #[error("a control point leaves its convex region")]
    ControlPointOutsideRegion,
}

/// Cubic segment from the robot pose to the arc junction, with its time
/// scale. Control points must stay inside the inflated circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicSegment {
    pub p0: Vec2,
    pub p1: Vec2,
    pub p2: Vec2,
    pub p3: Vec2,
    /// Traversal time of this segment at the desired speed.
    pub t_f1: f64,
}

impl CubicSegment {
    pub fn position(&self, u: f64) -> Vec2 {
        let v = 1.0 - u;
        self.p0 * (v * v * v)
            + self.p1 * (3.0 * v * v * u)
            + self.p2 * (3.0 * v * u * u)
            + self.p3 * (u * u * u)
    }

    /// Derivative with respect to the curve parameter u.
    pub fn derivative(&self, u: f64) -> Vec2 {
        let v = 1.0 - u;
        (self.p1 - self.p0) * (3.0 * v * v)
            + (self.p2 - self.p1) * (6.0 * v * u)
            + (self.p3 - self.p2) * (3.0 * u * u)
    }

    pub fn second_derivative(&self, u: f64) -> Vec2 {
        let v = 1.0 - u;
        (self.p2 - self.p1 * 2.0 + self.p0) * (6.0 * v) + (self.p3 - self.p2 * 2.0 + self.p1) * (6.0 * u)
    }
}

/// Quadratic segment from the arc junction to the local goal. Control
/// points must stay inside the inflated polygon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSegment {
    pub q0: Vec2,
    pub q1: Vec2,
    pub q2: Vec2,
    /// Traversal time of this segment at the desired speed.
    pub t_f2: f64,
    /// Fraction of the nominal middle-control-point offset that kept q1
    /// inside the polygon, in (0, 1].
    pub lambda: f64,
}

impl QuadSegment {
    pub fn position(&self, u: f64) -> Vec2 {
        let v = 1.0 - u;
        self.q0 * (v * v) + self.q1 * (2.0 * v * u) + self.q2 * (u * u)
    }

    pub fn derivative(&self, u: f64) -> Vec2 {
        (self.q1 - self.q0) * (2.0 * (1.0 - u)) + (self.q2 - self.q1) * (2.0 * u)
    }
}

/// A cubic head plus optional quadratic tail with a G1 junction on the
/// inflated circle's arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinedBezierPath {
    pub first: CubicSegment,
    pub second: Option<QuadSegment>,
    /// Junction point; equals the cubic endpoint.
    pub arc_point: Vec2,
    /// The local goal this path was planned toward.
    pub local_goal: Vec2,
    /// Heading at the start, used where the curve tangent vanishes.
    pub initial_theta: f64,
}

impl JoinedBezierPath {
    /// Total traversal time at the planning speed.
    pub fn total_time(&self) -> f64 {
        self.first.t_f1 + self.second.map_or(0.0, |s| s.t_f2)
    }

    pub fn end_position(&self) -> Vec2 {
        match &self.second {
            Some(s) => s.q2,
            None => self.first.p3,
        }
    }

    /// The same path expressed in a frame shifted by `offset` (every control
    /// point moves; headings and durations are unchanged).
    pub fn translated(&self, offset: Vec2) -> Self {
        let mut out = self.clone();
        out.first.p0 += offset;
        out.first.p1 += offset;
        out.first.p2 += offset;
        out.first.p3 += offset;
        if let Some(s) = &mut out.second {
            s.q0 += offset;
            s.q1 += offset;
            s.q2 += offset;
        }
        out.arc_point += offset;
        out.local_goal += offset;
        out
    }
}

/// Weights of the path score: terminal goal-distance and heading-change
/// terms plus a per-sample obstacle proximity penalty that is zero beyond
/// `r_max`, exponential between `r_ins` and `r_max`, and infinite at or
/// inside `r_ins`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScoreWeights {
    /// Weight of the terminal distance to the local goal (1/m).
    pub w1: f64,
    /// Weight of the terminal heading change (1/rad).
    pub w_theta: f64,
    /// Decay rate of the obstacle penalty (1/m).
    pub w_decay: f64,
    /// Obstacle penalty magnitude at distance r_ins.
    pub c_obs: f64,
    /// Distance at or below which a sample is considered in collision.
    pub r_ins: f64,
    /// Distance beyond which obstacles are ignored.
    pub r_max: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self { w1: 1.0, w_theta: 0.3, w_decay: 3.0, c_obs: 8.0, r_ins: 0.2, r_max: 1.5 }
    }
}

/// Junction point on the gap-facing arc, biased toward the goal: the goal
/// bearing about the circle center clamped into the arc's angular span.
pub fn biased_arc_point(
    k: &InflatedKeyhole,
    goal: Vec2,
    pose0: &Pose2,
) -> Result<Vec2, BezierError> {
    let (start, extent) = k.gap_arc();
    if extent <= EPS || (k.arc_left - k.arc_right).norm() <= EPS {
        return Err(BezierError::DegenerateArc);
    }
    let rel = goal - pose0.position();
    let bearing = rel.y.atan2(rel.x);
    let offset = (bearing - start).rem_euclid(2.0 * std::f64::consts::PI);
    let clamped = if offset <= extent {
        offset
    } else {
        // Outside the arc: snap to the angularly nearer endpoint.
        let past_end = offset - extent;
        let before_start = 2.0 * std::f64::consts::PI - offset;
        if past_end <= before_start {
            extent
        } else {
            0.0
        }
    };
    let a = start + clamped;
    Ok(k.circle.center + Vec2::new(a.cos(), a.sin()) * k.circle.radius)
}

/// Cubic head whose time-scaled derivatives at the start reproduce the
/// robot's speed `v0` along its heading and acceleration `a0`.
pub fn first_segment(
    pose0: &Pose2,
    v0: f64,
    a0: Vec2,
    x_c: Vec2,
    v_d: f64,
) -> Result<CubicSegment, BezierError> {
    let p0 = pose0.position();
    let dist = (x_c - p0).norm();
    if dist <= EPS {
        return Err(BezierError::ZeroLengthSegment);
    }
    let t_f1 = dist / v_d;
    if !t_f1.is_finite() || t_f1 <= 0.0 {
        return Err(BezierError::ZeroLengthSegment);
    }
    let p1 = p0 + pose0.heading() * (t_f1 * v0 / 3.0);
    let p2 = a0 * (t_f1 * t_f1 / 6.0) - p0 + p1 * 2.0;
    Ok(CubicSegment { p0, p1, p2, p3: x_c, t_f1 })
}

/// Quadratic tail leaving the junction along the cubic's end tangent; the
/// middle control point backs off along that tangent just enough to stay
/// inside the polygon.
pub fn second_segment(
    x_c: Vec2,
    p2_of_first: Vec2,
    p3_of_first: Vec2,
    goal: Vec2,
    v_d: f64,
    k: &InflatedKeyhole,
) -> Result<QuadSegment, BezierError> {
    let tangent = p3_of_first - p2_of_first;
    if tangent.norm() <= EPS {
        return Err(BezierError::UndefinedDirection);
    }
    let d = tangent / tangent.norm();
    let dist = (goal - x_c).norm();
    if dist <= EPS {
        return Err(BezierError::ZeroLengthSegment);
    }
    let t_f2 = dist / v_d;
    let nominal = d * (t_f2 * v_d / 2.0);
    let q1_at = |lambda: f64| x_c + nominal * lambda;

    let lambda = if k.polygon.contains(q1_at(1.0)) {
        1.0
    } else {
        // Membership is monotone in lambda (the polygon is convex and
        // q1(0) = x_c is inside), so bisect to 1e-6.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            if k.polygon.contains(q1_at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    if lambda < 1e-6 {
        return Err(BezierError::NoValidLengthScale);
    }
    Ok(QuadSegment { q0: x_c, q1: q1_at(lambda), q2: goal, t_f2, lambda })
}

/// Builds the joined path to `goal`: a single cubic when the goal is
/// already inside the inflated circle, otherwise a cubic to the biased
/// arc point joined to a quadratic. Fails (instead of returning an
/// uncertified path) when any control point leaves its convex region.
pub fn synthesize(
    k: &InflatedKeyhole,
    goal: Vec2,
    pose0: &Pose2,
    v0: f64,
    a0: Vec2,
    v_d: f64,
) -> Result<JoinedBezierPath, BezierError> {
    if !k.contains(goal) {
        return Err(BezierError::GoalOutsideRegion);
    }
    let tol = 1e-9;
    let in_circle = |p: Vec2| (p - k.circle.center).norm() <= k.circle.radius + tol;

    if in_circle(goal) {
        let first = first_segment(pose0, v0, a0, goal, v_d)?;
        for p in [first.p0, first.p1, first.p2, first.p3] {
            if !in_circle(p) {
                return Err(BezierError::ControlPointOutsideRegion);
            }
        }
        return Ok(JoinedBezierPath {
            first,
            second: None,
            arc_point: goal,
            local_goal: goal,
            initial_theta: pose0.theta,
        });
    }

    let x_c = biased_arc_point(k, goal, pose0)?;
    let first = first_segment(pose0, v0, a0, x_c, v_d)?;
    for p in [first.p0, first.p1, first.p2, first.p3] {
        if !in_circle(p) {
            return Err(BezierError::ControlPointOutsideRegion);
        }
    }
    let second = second_segment(x_c, first.p2, first.p3, goal, v_d, k)?;
    for q in [second.q0, second.q1, second.q2] {
        if !k.polygon.contains(q) {
            return Err(BezierError::ControlPointOutsideRegion);
        }
    }
    Ok(JoinedBezierPath {
        first,
        second: Some(second),
        arc_point: x_c,
        local_goal: goal,
        initial_theta: pose0.theta,
    })
}

/// Pose on the path at normalized parameter `s` in [0,1], split across
/// the segments proportionally to their time scales. The heading is the
/// curve tangent; where the tangent vanishes (a rest start), the heading
/// immediately before it along the path is held, falling back to the
/// initial heading at the very start.
pub fn evaluate(path: &JoinedBezierPath, s: f64) -> Pose2 {
    let s = s.clamp(0.0, 1.0);
    let total = path.total_time();
    let tau = s * total;
    let (pos, mut deriv, on_first, u) = if path.second.is_none() || tau <= path.first.t_f1 {
        let u = if path.first.t_f1 > 0.0 { (tau / path.first.t_f1).min(1.0) } else { 0.0 };
        (path.first.position(u), path.first.derivative(u), true, u)
    } else {
        let second = path.second.as_ref().unwrap();
        let u = ((tau - path.first.t_f1) / second.t_f2).clamp(0.0, 1.0);
        (second.position(u), second.derivative(u), false, u)
    };
    if deriv.norm() <= 1e-12 {
        // Stationary point: look just behind it on the same segment,
        // then fall back to the start heading.
        let u_back = (u - 1e-6).max(0.0);
        deriv = if on_first {
            path.first.derivative(u_back)
        } else {
            path.second.as_ref().unwrap().derivative(u_back)
        };
        if deriv.norm() <= 1e-12 && !on_first {
            deriv = path.first.derivative(1.0);
        }
    }
    let theta =
        if deriv.norm() <= 1e-12 { path.initial_theta } else { deriv.y.atan2(deriv.x) };
    Pose2::new(pos.x, pos.y, theta)
}

/// Obstacle proximity penalty of a single sample.
fn proximity_cost(d: f64, w: &ScoreWeights) -> f64 {
    if d > w.r_max {
        0.0
    } else if d > w.r_ins {
        w.c_obs * (-w.w_decay * (d - w.r_ins)).exp()
    } else {
        f64::INFINITY
    }
}

/// Path score: summed obstacle proximity over uniformly spaced samples
/// plus terminal distance-to-goal and heading-change terms. Infinite when
/// any sample comes within `r_ins` of a scan return.
pub fn score(
    path: &JoinedBezierPath,
    scan: &EgoCircle,
    local_goal_pose: &Pose2,
    pose0: &Pose2,
    w: &ScoreWeights,
    n_samples: usize,
) -> f64 {
    let obstacles: Vec<Vec2> =
        (0..scan.n_beams()).filter(|&i| !scan.is_max_range(i)).map(|i| scan.beam_point(i)).collect();
    let mut j = 0.0;
    for i in 0..n_samples {
        let s = i as f64 / (n_samples - 1) as f64;
        let x = evaluate(path, s).position();
        let d = obstacles
            .iter()
            .map(|q| (q - x).norm())
            .fold(f64::INFINITY, f64::min);
        let c = proximity_cost(d, w);
        if c.is_infinite() {
            return f64::INFINITY;
        }
        j += c;
    }
    let end = evaluate(path, 1.0);
    j += w.w1 * (end.position() - local_goal_pose.position()).norm();
    j += w.w_theta * wrap_angle(end.theta - pose0.theta).abs();
    j
}

/// Chooses the path to execute: the best-scoring new candidate replaces
/// the previously executed path only when it beats `switch_ratio` times
/// the previous path's re-scored cost; otherwise the previous path is
/// kept. Returns `None` when nothing is executable.
pub fn select(
    candidates: Vec<(JoinedBezierPath, f64)>,
    previous: Option<(JoinedBezierPath, f64)>,
    switch_ratio: f64,
) -> Option<(JoinedBezierPath, f64)> {
    let best = candidates
        .into_iter()
        .filter(|(_, s)| s.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1));
    match (best, previous) {
        (Some(b), Some((prev, prev_score))) if prev_score.is_finite() => {
            if b.1 < switch_ratio * prev_score {
                Some(b)
            } else {
                Some((prev, prev_score))
            }
        }
        (Some(b), _) => Some(b),
        (None, Some((prev, prev_score))) if prev_score.is_finite() => Some((prev, prev_score)),
        (None, _) => None,
    }
}

//! Gap detection and keyhole free-space construction.
//!
//! A gap is an opening between consecutive obstacle returns of the
//! egocircle. For each gap we build a keyhole: the largest robot-centered
//! collision-free disc joined with a convex polygon that reaches through
//! the gap. Gap sides start as tangents from the gap endpoints to the disc
//! and rotate inward (about their gap endpoint) until no scan return
//! obstructs them. Inflating the keyhole by robot radius plus margin gives
//! the region the path planner and barrier certify.
//!
//! All geometry here lives in the robot-centered, world-aligned frame of
//! the scan: the disc is centered at the origin.

use crate::geometry::{
    cross, largest_centered_disc, perp, wrap_angle, ConvexPolygon, Disc, EgoCircle, Segment, Vec2,
    EPS,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GapError {
    #[error("gap endpoint is inside or on the centered disc")]
    EndpointInsideDisc,
    #[error("side still obstructed at the rotation limit")]
    SideObstructed,
    #[error("keyhole polygon is degenerate")]
    DegeneratePolygon,
    #[error("inflation collapses the keyhole")]
    InflationTooLarge,
}

/// Knobs of the gap detector.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GapDetectionParams {
    /// Range jump between adjacent beams that opens a radial gap.
    pub range_jump_threshold: f64,
    /// Minimum Euclidean distance between gap endpoints.
    pub min_gap_width: f64,
    /// Gaps closer than this (angular separation) are merged.
    pub merge_angle: f64,
}

impl GapDetectionParams {
    /// Defaults scale with the robot: jumps above two diameters open a
    /// gap, openings below one diameter are impassable, and only gaps
    /// within two beams of each other merge.
    pub fn for_robot(robot_radius: f64, angle_increment: f64) -> Self {
        Self {
            range_jump_threshold: 4.0 * robot_radius,
            min_gap_width: 2.0 * robot_radius,
            merge_angle: 2.0 * angle_increment,
        }
    }
}

/// An opening between two obstacle returns. The left endpoint is the one
/// at the lower bearing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub left_index: usize,
    pub right_index: usize,
    pub left_point: Vec2,
    pub right_point: Vec2,
}

impl Gap {
    pub fn width(&self) -> f64 {
        (self.right_point - self.left_point).norm()
    }
}

/// Keyhole free space: centered disc joined with a convex polygon through
/// the gap. `arc_left`/`arc_right` are where the sides meet the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyhole {
    pub circle: Disc,
    pub polygon: ConvexPolygon,
    pub side_left: Segment,
    pub side_right: Segment,
    pub arc_left: Vec2,
    pub arc_right: Vec2,
}

/// Keyhole eroded by robot radius plus margin. Same shape as [`Keyhole`];
/// the polygon edge between the arc points is the chord through them, so
/// the inflated polygon and inflated circle still join seamlessly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflatedKeyhole {
    pub circle: Disc,
    pub polygon: ConvexPolygon,
    pub side_left: Segment,
    pub side_right: Segment,
    pub arc_left: Vec2,
    pub arc_right: Vec2,
    pub inflation: f64,
}

impl InflatedKeyhole {
    /// Closed membership in the inflated region.
    pub fn contains(&self, p: Vec2) -> bool {
        self.polygon.contains(p) || self.circle.contains(p)
    }

    /// Gap-facing arc as (start bearing at `arc_left`, counter-clockwise
    /// extent). This is the part of the circle interior to the polygon.
    pub fn gap_arc(&self) -> (f64, f64) {
        let start = self.arc_left.y.atan2(self.arc_left.x);
        let end = self.arc_right.y.atan2(self.arc_right.x);
        let extent = (end - start).rem_euclid(2.0 * std::f64::consts::PI);
        (start, extent)
    }

    /// The same region expressed in a frame shifted by `offset`.
    pub fn translated(&self, offset: Vec2) -> Self {
        let vertices = self.polygon.vertices().iter().map(|v| v + offset).collect();
        Self {
            circle: Disc { center: self.circle.center + offset, radius: self.circle.radius },
            polygon: ConvexPolygon::new(vertices)
                .expect("translation preserves convexity"),
            side_left: Segment { a: self.side_left.a + offset, b: self.side_left.b + offset },
            side_right: Segment { a: self.side_right.a + offset, b: self.side_right.b + offset },
            arc_left: self.arc_left + offset,
            arc_right: self.arc_right + offset,
            inflation: self.inflation,
        }
    }
}

/// True when a scan return blocks the segment: the return is within
/// `clearance` of `s` and not strictly behind the point of `s` at its own
/// bearing (a return whose ray never reaches `s` is merely lateral). The
/// segment's own anchor endpoints do not count: the left anchor is itself
/// a scan return by construction.
pub fn segment_obstructed(s: &Segment, scan: &EgoCircle, clearance: f64) -> bool {
    let dir_seg = s.b - s.a;
    for i in 0..scan.n_beams() {
        if scan.is_max_range(i) {
            continue;
        }
        let q = scan.beam_point(i);
        if (q - s.a).norm() < 1e-9 || (q - s.b).norm() < 1e-9 {
            continue;
        }
        if s.distance_to_point(q) > clearance {
            continue;
        }
        // Radius at which this beam's ray meets the segment, if it does.
        let a = scan.beam_angle(i);
        let dir = Vec2::new(a.cos(), a.sin());
        let denom = cross(dir, dir_seg);
        let r_seg = if denom.abs() >= 1e-12 {
            let t = -cross(dir, s.a) / denom;
            if !(-EPS..=1.0 + EPS).contains(&t) {
                continue;
            }
            dir.dot(&(s.a + dir_seg * t))
        } else if cross(dir, s.a).abs() <= 1e-9 {
            // Ray collinear with the segment (a fully rotated, radial
            // side): it spans an interval of radii; take the far end.
            dir.dot(&s.a).max(dir.dot(&s.b))
        } else {
            continue;
        };
        if r_seg > 0.0 && scan.ranges[i] <= r_seg + 1e-9 {
            return true;
        }
    }
    false
}

/// True when every scan return keeps at least `clearance` away from the
/// polygon (returns inside it count as zero distance). The sides of a
/// keyhole are verified against the scan during construction, but the far
/// chord between the gap endpoints is pure geometry: a surface curving in
/// between the endpoint returns, or a small obstacle between two merged
/// gaps, can sit inside the polygon. A region certified for the robot
/// center must keep every measured obstacle point a robot radius away.
pub fn polygon_clear_of_returns(
    polygon: &ConvexPolygon,
    scan: &EgoCircle,
    clearance: f64,
) -> bool {
    let vs = polygon.vertices();
    let mut lo = vs[0];
    let mut hi = vs[0];
    for v in vs {
        lo.x = lo.x.min(v.x);
        lo.y = lo.y.min(v.y);
        hi.x = hi.x.max(v.x);
        hi.y = hi.y.max(v.y);
    }
    let n = vs.len();
    for i in 0..scan.n_beams() {
        if scan.is_max_range(i) {
            continue;
        }
        let q = scan.beam_point(i);
        if q.x < lo.x - clearance
            || q.x > hi.x + clearance
            || q.y < lo.y - clearance
            || q.y > hi.y + clearance
        {
            continue;
        }
        if polygon.contains(q) {
            return false;
        }
        for k in 0..n {
            let edge = Segment { a: vs[k], b: vs[(k + 1) % n] };
            if edge.distance_to_point(q) < clearance {
                return false;
            }
        }
    }
    true
}

/// Detects gaps: maximal runs of max-range beams flanked by returns, and
/// single-boundary range discontinuities. Narrow gaps are dropped, nearby
/// gaps merged. The scan is treated as circular.
pub fn detect_gaps(scan: &EgoCircle, params: &GapDetectionParams) -> Vec<Gap> {
    let n = scan.n_beams();
    let far: Vec<bool> = (0..n).map(|i| scan.is_max_range(i)).collect();
    if far.iter().all(|&f| f) || n < 2 {
        return Vec::new();
    }
    let mut gaps: Vec<Gap> = Vec::new();

    // Max-range runs, flanked by the nearer returns on each end.
    for start in 0..n {
        if !far[start] || far[(start + n - 1) % n] {
            continue;
        }
        let mut end = start;
        while far[(end + 1) % n] {
            end = (end + 1) % n;
        }
        let left = (start + n - 1) % n;
        let right = (end + 1) % n;
        gaps.push(make_gap(scan, left, right));
    }

    // Radial discontinuities between two returns.
    for k in 0..n {
        let j = (k + 1) % n;
        if far[k] || far[j] {
            continue;
        }
        if (scan.ranges[j] - scan.ranges[k]).abs() > params.range_jump_threshold {
            gaps.push(make_gap(scan, k, j));
        }
    }

    gaps.retain(|g| g.width() >= params.min_gap_width);
    if gaps.len() > 1 {
        gaps = merge_nearby(scan, gaps, params.merge_angle);
    }
    gaps.sort_by(|a, b| {
        wrap_angle(scan.beam_angle(a.left_index))
            .total_cmp(&wrap_angle(scan.beam_angle(b.left_index)))
    });
    gaps
}

fn make_gap(scan: &EgoCircle, left: usize, right: usize) -> Gap {
    Gap {
        left_index: left,
        right_index: right,
        left_point: scan.beam_point(left),
        right_point: scan.beam_point(right),
    }
}

fn merge_nearby(scan: &EgoCircle, mut gaps: Vec<Gap>, merge_angle: f64) -> Vec<Gap> {
    let tau = 2.0 * std::f64::consts::PI;
    gaps.sort_by(|a, b| {
        scan.beam_angle(a.left_index)
            .rem_euclid(tau)
            .total_cmp(&scan.beam_angle(b.left_index).rem_euclid(tau))
    });
    let mut out: Vec<Gap> = Vec::new();
    for g in gaps {
        match out.last_mut() {
            Some(prev) => {
                let sep = (scan.beam_angle(g.left_index) - scan.beam_angle(prev.right_index))
                    .rem_euclid(tau);
                if sep < merge_angle || prev.right_index == g.left_index {
                    prev.right_index = g.right_index;
                    prev.right_point = g.right_point;
                } else {
                    out.push(g);
                }
            }
            None => out.push(g),
        }
    }
    // Circular closure: the last gap may merge into the first.
    if out.len() > 1 {
        let first = out[0];
        let last = *out.last().unwrap();
        let sep =
            (scan.beam_angle(first.left_index) - scan.beam_angle(last.right_index)).rem_euclid(tau);
        if sep < merge_angle || last.right_index == first.left_index {
            out[0].left_index = last.left_index;
            out[0].left_point = last.left_point;
            out.pop();
        }
    }
    out
}

/// First intersection of the ray `origin + t*dir` (t > 0) with the circle
/// of radius `r` about the origin of the frame. Caller guarantees the ray
/// points at the circle; near-tangency is snapped to the touch point.
fn ray_circle_first_hit(origin: Vec2, dir: Vec2, r: f64) -> Option<Vec2> {
    let b = origin.dot(&dir);
    let c = origin.norm_squared() - r * r;
    let disc = b * b - c;
    if disc < -1e-9 {
        return None;
    }
    let t = -b - disc.max(0.0).sqrt();
    if t <= 0.0 {
        return None;
    }
    Some(origin + dir * t)
}

/// Builds the keyhole for one gap. Sides start at the tangent segments and
/// rotate inward in steps of the scan's angular increment while obstructed,
/// at most until they pass through the circle center. A side counts as
/// obstructed when a return comes within `robot_radius` of it, so the
/// final sides are traversable by the inflated robot.
pub fn construct_keyhole(
    gap: &Gap,
    scan: &EgoCircle,
    robot_radius: f64,
) -> Result<Keyhole, GapError> {
    let clearance = robot_radius;
    let circle = largest_centered_disc(scan);
    let r = circle.radius;
    let step = scan.angle_increment;

    let resolve_side = |g: Vec2, inward_ccw: bool| -> Result<(Segment, Vec2), GapError> {
        let l = g.norm();
        if l <= r + EPS {
            return Err(GapError::EndpointInsideDisc);
        }
        // Tangent direction on the requested side of the center direction.
        let center_dir_angle = (-g.y).atan2(-g.x);
        let half = (r / l).asin();
        // The tangent ray from g is `half` away from the center direction;
        // inward rotation closes that angle to zero.
        let sign = if inward_ccw { 1.0 } else { -1.0 };
        let tangent_angle = center_dir_angle - sign * half;
        let n_steps = (half / step).ceil() as usize;
        for k in 0..=n_steps {
            let rot = (k as f64 * step).min(half);
            let a = tangent_angle + sign * rot;
            let dir = Vec2::new(a.cos(), a.sin());
            let Some(p) = ray_circle_first_hit(g, dir, r) else {
                continue;
            };
            let side = Segment::new(g, p).map_err(|_| GapError::DegeneratePolygon)?;
            if !segment_obstructed(&side, scan, clearance) {
                return Ok((side, p));
            }
        }
        Err(GapError::SideObstructed)
    };

    // Left endpoint sits at the lower bearing; its side rotates clockwise
    // inward. The right side rotates counter-clockwise.
    let (side_left, p_l) = resolve_side(gap.left_point, false)?;
    let (side_right, p_r) = resolve_side(gap.right_point, true)?;

    let polygon = keyhole_polygon(gap.left_point, gap.right_point, p_r, p_l)?;
    Ok(Keyhole {
        circle,
        polygon,
        side_left,
        side_right,
        arc_left: p_l,
        arc_right: p_r,
    })
}

/// The keyhole polygon (g_l, g_r, p_r, p_l); if one vertex turned reflex
/// after the side rotations, it is dropped and the triangle used instead.
fn keyhole_polygon(g_l: Vec2, g_r: Vec2, p_r: Vec2, p_l: Vec2) -> Result<ConvexPolygon, GapError> {
    let quad = vec![g_l, g_r, p_r, p_l];
    if let Ok(p) = ConvexPolygon::new(quad.clone()) {
        return Ok(p);
    }
    // Find the reflex vertex with respect to the dominant orientation.
    let n = quad.len();
    let area: f64 = (0..n)
        .map(|i| cross(quad[i], quad[(i + 1) % n]))
        .sum::<f64>();
    let orient = if area >= 0.0 { 1.0 } else { -1.0 };
    for i in 0..n {
        let prev = quad[(i + n - 1) % n];
        let next = quad[(i + 1) % n];
        if orient * cross(quad[i] - prev, next - quad[i]) < 0.0 {
            let mut tri = quad.clone();
            tri.remove(i);
            return ConvexPolygon::new(tri).map_err(|_| GapError::DegeneratePolygon);
        }
    }
    Err(GapError::DegeneratePolygon)
}

/// A line written as anchor point plus unit direction.
#[derive(Clone, Copy)]
struct ParamLine {
    anchor: Vec2,
    dir: Vec2,
}

impl ParamLine {
    fn offset_toward(&self, reference: Vec2, d: f64) -> ParamLine {
        let mut n = perp(self.dir);
        if n.dot(&(reference - self.anchor)) < 0.0 {
            n = -n;
        }
        ParamLine { anchor: self.anchor + n * d, dir: self.dir }
    }

    fn intersect(&self, other: &ParamLine) -> Option<Vec2> {
        let det = cross(self.dir, other.dir);
        if det.abs() < 1e-12 {
            return None;
        }
        let t = cross(other.anchor - self.anchor, other.dir) / det;
        Some(self.anchor + self.dir * t)
    }
}

/// Erodes the keyhole by `robot_radius + margin`: circle radius shrinks,
/// the far edge and both side lines move inward, the arc points become the
/// inflated side/circle intersections, and the polygon chord runs through
/// them so the union stays seamless.
pub fn inflate_keyhole(
    k: &Keyhole,
    robot_radius: f64,
    margin: f64,
) -> Result<InflatedKeyhole, GapError> {
    let inflation = robot_radius + margin;
    if inflation >= k.circle.radius {
        return Err(GapError::InflationTooLarge);
    }
    let circle = Disc { center: Vec2::zeros(), radius: k.circle.radius - inflation };
    if inflation == 0.0 {
        return Ok(InflatedKeyhole {
            circle,
            polygon: k.polygon.clone(),
            side_left: k.side_left,
            side_right: k.side_right,
            arc_left: k.arc_left,
            arc_right: k.arc_right,
            inflation,
        });
    }
    let interior = k.polygon.centroid();
    let g_l = k.side_left.a;
    let g_r = k.side_right.a;

    let left = ParamLine { anchor: g_l, dir: k.side_left.direction() }
        .offset_toward(interior, inflation);
    let right = ParamLine { anchor: g_r, dir: k.side_right.direction() }
        .offset_toward(interior, inflation);
    let far = ParamLine { anchor: g_l, dir: (g_r - g_l).normalize() }
        .offset_toward(interior, inflation);

    let arc_left = line_circle_near(&left, circle.radius, k.arc_left)
        .ok_or(GapError::InflationTooLarge)?;
    let arc_right = line_circle_near(&right, circle.radius, k.arc_right)
        .ok_or(GapError::InflationTooLarge)?;
    let gt_l = far.intersect(&left).ok_or(GapError::DegeneratePolygon)?;
    let gt_r = far.intersect(&right).ok_or(GapError::DegeneratePolygon)?;

    let polygon = keyhole_polygon(gt_l, gt_r, arc_right, arc_left)?;
    let side_left = Segment::new(gt_l, arc_left).map_err(|_| GapError::DegeneratePolygon)?;
    let side_right = Segment::new(gt_r, arc_right).map_err(|_| GapError::DegeneratePolygon)?;
    Ok(InflatedKeyhole {
        circle,
        polygon,
        side_left,
        side_right,
        arc_left,
        arc_right,
        inflation,
    })
}

/// Intersection of a line with the origin-centered circle of radius `r`
/// nearest to `near`. Near-tangency snaps to the touch point.
fn line_circle_near(line: &ParamLine, r: f64, near: Vec2) -> Option<Vec2> {
    let b = line.anchor.dot(&line.dir);
    let c = line.anchor.norm_squared() - r * r;
    let disc = b * b - c;
    if disc < -1e-9 {
        return None;
    }
    let sq = disc.max(0.0).sqrt();
    let p1 = line.anchor + line.dir * (-b - sq);
    let p2 = line.anchor + line.dir * (-b + sq);
    if (p1 - near).norm() <= (p2 - near).norm() {
        Some(p1)
    } else {
        Some(p2)
    }
}

//! Planar geometric primitives shared by every other module.
//!
//! Conventions, chosen once here so callers never re-branch on them:
//!
//! * Angles are in radians and normalized to `(-pi, pi]` by [`wrap_angle`].
//! * Containment tests are closed: boundary points are inside (tolerance
//!   [`EPS`] in meters).
//! * [`ConvexPolygon`] stores vertices counter-clockwise; the constructor
//!   reorders clockwise input and rejects non-convex input.
//! * All types are plain values; operations return new values.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

/// Absolute tolerance (meters) for closed-set membership and degeneracy
/// checks. Coordinates in this codebase are O(1..10) meters.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 non-collinear vertices")]
    TooFewVertices,
    #[error("polygon is not convex")]
    NotConvex,
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("disc radius must be positive")]
    BadRadius,
    #[error("point is inside or on the disc")]
    PointNotOutsideDisc,
    #[error("invalid range scan: {0}")]
    BadScan(&'static str),
}

/// Normalizes an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Rotates `v` by `angle` radians counter-clockwise.
pub fn rotate(v: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Left-hand perpendicular (counter-clockwise quarter turn).
#[inline]
pub fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Z component of the cross product of two planar vectors.
#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Robot pose: position plus heading. `theta` is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    #[inline]
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Unit heading vector `(cos theta, sin theta)`.
    #[inline]
    pub fn heading(&self) -> Vec2 {
        Vec2::new(self.theta.cos(), self.theta.sin())
    }
}

/// Unicycle command: linear speed `v` (m/s) and yaw rate `w` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub v: f64,
    pub w: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist { v: 0.0, w: 0.0 };

    pub fn new(v: f64, w: f64) -> Self {
        Self { v, w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Vec2,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Vec2, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0) {
            return Err(GeometryError::BadRadius);
        }
        Ok(Self { center, radius })
    }

    /// Closed containment: boundary points are inside.
    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        (p - self.center).norm() <= self.radius + EPS
    }

    /// Signed distance to the disc boundary (negative inside).
    #[inline]
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        (p - self.center).norm() - self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Result<Self, GeometryError> {
        if (b - a).norm() <= EPS {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(Self { a, b })
    }

    #[inline]
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    #[inline]
    pub fn direction(&self) -> Vec2 {
        (self.b - self.a).normalize()
    }

    #[inline]
    pub fn point_at(&self, t: f64) -> Vec2 {
        self.a + (self.b - self.a) * t
    }

    /// Closest point on the (closed) segment to `p`.
    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        let d = self.b - self.a;
        let t = ((p - self.a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        self.a + d * t
    }

    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        (p - self.closest_point(p)).norm()
    }
}

/// Convex polygon with counter-clockwise vertices.
///
/// The constructor reorders clockwise input, drops collinear vertices, and
/// rejects anything that is not strictly convex afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices);
        }
        let mut vs = vertices;
        if signed_area(&vs) < 0.0 {
            vs.reverse();
        }
        // Drop collinear or repeated vertices; what remains must turn left
        // at every corner.
        let mut kept: Vec<Vec2> = Vec::with_capacity(vs.len());
        let n = vs.len();
        for i in 0..n {
            let prev = vs[(i + n - 1) % n];
            let cur = vs[i];
            let next = vs[(i + 1) % n];
            let c = cross(cur - prev, next - cur);
            if c > EPS {
                kept.push(cur);
            } else if c < -EPS {
                return Err(GeometryError::NotConvex);
            }
        }
        if kept.len() < 3 {
            return Err(GeometryError::TooFewVertices);
        }
        Ok(Self { vertices: kept })
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len() as f64;
        self.vertices.iter().sum::<Vec2>() / n
    }

    /// Closed containment: the point is inside or on the boundary.
    pub fn contains(&self, p: Vec2) -> bool {
        self.edges().all(|(a, b)| cross(b - a, p - a) >= -EPS)
    }

    /// Distance from `p` to the polygon (zero inside).
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| Segment { a, b }.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Moves every edge inward by `d` and rebuilds vertices from consecutive
    /// edge intersections. Returns `None` when the polygon collapses.
    pub fn offset_inward(&self, d: f64) -> Option<ConvexPolygon> {
        let n = self.vertices.len();
        // Inward-offset supporting line of edge i: normal.dot(p) = offset.
        let mut normals = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for (a, b) in self.edges() {
            let inward = perp((b - a).normalize());
            normals.push(inward);
            offsets.push(inward.dot(&a) + d);
        }
        let mut verts = Vec::with_capacity(n);
        for i in 0..n {
            let j = (i + 1) % n;
            let (n1, n2) = (normals[i], normals[j]);
            let det = cross(n1, n2);
            if det.abs() < 1e-12 {
                return None;
            }
            let x = (offsets[i] * n2.y - offsets[j] * n1.y) / det;
            let y = (offsets[j] * n1.x - offsets[i] * n2.x) / det;
            verts.push(Vec2::new(x, y));
        }
        // Collapse shows up as orientation inversion or as a vertex that
        // violates one of the other offset half-planes (an edge vanished).
        if signed_area(&verts) <= 0.0 {
            return None;
        }
        for v in &verts {
            for k in 0..n {
                if normals[k].dot(v) < offsets[k] - EPS {
                    return None;
                }
            }
        }
        ConvexPolygon::new(verts).ok()
    }
}

fn signed_area(vs: &[Vec2]) -> f64 {
    let n = vs.len();
    let mut s = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        s += cross(vs[i], vs[j]);
    }
    0.5 * s
}

/// One full-circle range scan around the robot.
///
/// Beam `i` points along `angle_min + i * angle_increment`; ranges are
/// clipped to `(0, max_range]`. Angles are bearings in the robot-centered,
/// world-aligned planning frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoCircle {
    pub angle_min: f64,
    pub angle_increment: f64,
    pub max_range: f64,
    pub ranges: Vec<f64>,
}

impl EgoCircle {
    pub fn new(
        angle_min: f64,
        angle_increment: f64,
        max_range: f64,
        ranges: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        if ranges.is_empty() {
            return Err(GeometryError::BadScan("no beams"));
        }
        if !(angle_increment > 0.0) {
            return Err(GeometryError::BadScan("non-positive angle increment"));
        }
        if !(max_range > 0.0) {
            return Err(GeometryError::BadScan("non-positive max range"));
        }
        if ranges.iter().any(|r| !(*r > 0.0 && *r <= max_range + EPS)) {
            return Err(GeometryError::BadScan("range outside (0, max_range]"));
        }
        Ok(Self { angle_min, angle_increment, max_range, ranges })
    }

    #[inline]
    pub fn n_beams(&self) -> usize {
        self.ranges.len()
    }

    #[inline]
    pub fn beam_angle(&self, i: usize) -> f64 {
        self.angle_min + i as f64 * self.angle_increment
    }

    /// Cartesian endpoint of beam `i` in the scan frame.
    #[inline]
    pub fn beam_point(&self, i: usize) -> Vec2 {
        let a = self.beam_angle(i);
        Vec2::new(self.ranges[i] * a.cos(), self.ranges[i] * a.sin())
    }

    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        (0..self.n_beams()).map(move |i| self.beam_point(i))
    }

    /// True when beam `i` saw nothing within range.
    #[inline]
    pub fn is_max_range(&self, i: usize) -> bool {
        self.ranges[i] >= self.max_range - 1e-6
    }
}

/// Largest robot-centered disc free of scan returns: radius is the minimum
/// range. The scan invariant (all ranges positive) keeps the radius positive.
pub fn largest_centered_disc(scan: &EgoCircle) -> Disc {
    let r = scan.ranges.iter().cloned().fold(f64::INFINITY, f64::min);
    Disc { center: Vec2::zeros(), radius: r }
}

/// Both tangent points of the disc as seen from an external point `p`,
/// ordered by ascending polar angle about the disc center.
pub fn tangent_points(disc: &Disc, p: Vec2) -> Result<(Vec2, Vec2), GeometryError> {
    let d = p - disc.center;
    let l = d.norm();
    if l <= disc.radius + EPS {
        return Err(GeometryError::PointNotOutsideDisc);
    }
    let u = d / l;
    let phi = (disc.radius / l).acos();
    let t_plus = disc.center + rotate(u, phi) * disc.radius;
    let t_minus = disc.center + rotate(u, -phi) * disc.radius;
    let ang = |t: Vec2| {
        let v = t - disc.center;
        v.y.atan2(v.x)
    };
    if ang(t_minus) <= ang(t_plus) {
        Ok((t_minus, t_plus))
    } else {
        Ok((t_plus, t_minus))
    }
}

/// Intersections of a segment with a disc boundary, ordered by segment
/// parameter. Tangency yields a single point.
pub fn segment_disc_intersections(seg: &Segment, disc: &Disc) -> Vec<Vec2> {
    let d = seg.b - seg.a;
    let f = seg.a - disc.center;
    let a = d.norm_squared();
    let b = 2.0 * f.dot(&d);
    let c = f.norm_squared() - disc.radius * disc.radius;
    let disc_b = b * b - 4.0 * a * c;
    if disc_b < 0.0 {
        return Vec::new();
    }
    let sq = disc_b.sqrt();
    let t1 = (-b - sq) / (2.0 * a);
    let t2 = (-b + sq) / (2.0 * a);
    let mut out = Vec::new();
    for t in [t1, t2] {
        if (-EPS..=1.0 + EPS).contains(&t) {
            out.push(seg.point_at(t.clamp(0.0, 1.0)));
        }
    }
    if out.len() == 2 && (out[0] - out[1]).norm() < EPS {
        out.pop();
    }
    out
}

/// Closed membership in the union of a convex polygon and a disc.
pub fn point_in_region(p: Vec2, polygon: &ConvexPolygon, disc: &Disc) -> bool {
    polygon.contains(p) || disc.contains(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    /// Winding-number membership test, written independently of the
    /// half-plane test used by ConvexPolygon::contains.
    fn winding_contains(vs: &[Vec2], p: Vec2, tol: f64) -> bool {
        let n = vs.len();
        // Boundary check first: closed membership.
        for i in 0..n {
            let (a, b) = (vs[i], vs[(i + 1) % n]);
            if (Segment { a, b }).distance_to_point(p) <= tol {
                return true;
            }
        }
        let mut winding = 0i32;
        for i in 0..n {
            let (a, b) = (vs[i], vs[(i + 1) % n]);
            if a.y <= p.y {
                if b.y > p.y && cross(b - a, p - a) > 0.0 {
                    winding += 1;
                }
            } else if b.y <= p.y && cross(b - a, p - a) < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    #[test]
    fn wrap_angle_covers_branch_points() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-3.5 * PI) - 0.5 * PI).abs() < 1e-12);
        for k in -20..20 {
            let a = 0.37 + k as f64 * 2.0 * PI;
            assert!((wrap_angle(a) - 0.37).abs() < 1e-9);
        }
    }

    #[test]
    fn pose_normalizes_heading() {
        let p = Pose2::new(1.0, 2.0, 3.0 * PI);
        assert!((p.theta - PI).abs() < 1e-12);
        assert_eq!(p.position(), v(1.0, 2.0));
    }

    #[test]
    fn tangent_points_match_closed_form() {
        let disc = Disc::new(v(0.0, 0.0), 1.0).unwrap();
        let (t1, t2) = tangent_points(&disc, v(2.0, 0.0)).unwrap();
        let s3 = 3.0_f64.sqrt() / 2.0;
        assert!((t1 - v(0.5, -s3)).norm() < 1e-12);
        assert!((t2 - v(0.5, s3)).norm() < 1e-12);
    }

    #[test]
    fn tangent_points_are_orthogonal_everywhere() {
        // Tangency oracle: (t - c) is orthogonal to (t - p) and |t - c| = r.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let c = v(next() * 8.0 - 4.0, next() * 8.0 - 4.0);
            let r = 0.1 + next() * 3.0;
            let disc = Disc::new(c, r).unwrap();
            let ang = next() * 2.0 * PI;
            let dist = r * (1.01 + next() * 5.0);
            let p = c + rotate(v(1.0, 0.0), ang) * dist;
            let (t1, t2) = tangent_points(&disc, p).unwrap();
            for t in [t1, t2] {
                assert!(((t - c).norm() - r).abs() < 1e-9);
                assert!((t - c).dot(&(t - p)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tangent_points_reject_interior_and_boundary() {
        let disc = Disc::new(v(0.0, 0.0), 1.0).unwrap();
        assert_eq!(tangent_points(&disc, v(1.0, 0.0)), Err(GeometryError::PointNotOutsideDisc));
        assert_eq!(tangent_points(&disc, v(0.2, 0.1)), Err(GeometryError::PointNotOutsideDisc));
    }

    #[test]
    fn segment_disc_intersections_ordered_by_parameter() {
        let seg = Segment::new(v(-2.0, 1.0), v(2.0, 1.0)).unwrap();
        let disc = Disc::new(v(0.0, 0.0), 2.0_f64.sqrt()).unwrap();
        let pts = segment_disc_intersections(&seg, &disc);
        assert_eq!(pts.len(), 2);
        assert!((pts[0] - v(-1.0, 1.0)).norm() < 1e-9);
        assert!((pts[1] - v(1.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn segment_disc_tangency_single_point() {
        let seg = Segment::new(v(-2.0, 1.0), v(2.0, 1.0)).unwrap();
        let disc = Disc::new(v(0.0, 0.0), 1.0).unwrap();
        let pts = segment_disc_intersections(&seg, &disc);
        assert_eq!(pts.len(), 1);
        assert!((pts[0] - v(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn segment_disc_miss_is_empty() {
        let seg = Segment::new(v(-2.0, 3.0), v(2.0, 3.0)).unwrap();
        let disc = Disc::new(v(0.0, 0.0), 1.0).unwrap();
        assert!(segment_disc_intersections(&seg, &disc).is_empty());
    }

    #[test]
    fn polygon_reorders_clockwise_input() {
        let cw = vec![v(0.0, 0.0), v(0.0, 1.0), v(1.0, 1.0), v(1.0, 0.0)];
        let p = ConvexPolygon::new(cw).unwrap();
        let vs = p.vertices();
        let mut area = 0.0;
        for i in 0..vs.len() {
            area += cross(vs[i], vs[(i + 1) % vs.len()]);
        }
        assert!(area > 0.0);
    }

    #[test]
    fn polygon_rejects_nonconvex() {
        let vs = vec![v(0.0, 0.0), v(2.0, 0.0), v(1.0, 0.5), v(2.0, 2.0), v(0.0, 2.0)];
        assert!(ConvexPolygon::new(vs).is_err());
    }

    #[test]
    fn polygon_drops_collinear_vertices() {
        let vs = vec![v(0.0, 0.0), v(1.0, 0.0), v(2.0, 0.0), v(2.0, 2.0), v(0.0, 2.0)];
        let p = ConvexPolygon::new(vs).unwrap();
        assert_eq!(p.vertices().len(), 4);
    }

    #[test]
    fn polygon_containment_matches_winding_oracle() {
        let poly = ConvexPolygon::new(vec![
            v(-1.0, -1.0),
            v(2.0, -0.5),
            v(2.5, 1.5),
            v(0.0, 2.0),
            v(-1.5, 0.5),
        ])
        .unwrap();
        let mut state = 0xdeadbeefcafef00du64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut disagreements = 0;
        for _ in 0..10_000 {
            let p = v(next() * 8.0 - 4.0, next() * 8.0 - 4.0);
            let ours = poly.contains(p);
            let oracle = winding_contains(poly.vertices(), p, EPS);
            // The two tests may legitimately disagree within EPS of the
            // boundary; nowhere else.
            if ours != oracle {
                let d = poly
                    .edges()
                    .map(|(a, b)| Segment { a, b }.distance_to_point(p))
                    .fold(f64::INFINITY, f64::min);
                assert!(d <= 10.0 * EPS, "disagreement at distance {d}");
                disagreements += 1;
            }
        }
        assert!(disagreements < 10);
    }

    #[test]
    fn polygon_boundary_point_is_inside() {
        let poly = ConvexPolygon::new(vec![v(0.0, 0.0), v(2.0, 0.0), v(2.0, 2.0), v(0.0, 2.0)])
            .unwrap();
        assert!(poly.contains(v(1.0, 0.0)));
        assert!(poly.contains(v(2.0, 2.0)));
        assert!(!poly.contains(v(2.0 + 1e-6, 1.0)));
    }

    #[test]
    fn square_offset_inward_shrinks_sides() {
        let poly = ConvexPolygon::new(vec![
            v(-1.0, -1.0),
            v(1.0, -1.0),
            v(1.0, 1.0),
            v(-1.0, 1.0),
        ])
        .unwrap();
        let inner = poly.offset_inward(0.25).unwrap();
        let vs = inner.vertices();
        assert_eq!(vs.len(), 4);
        for v in vs {
            assert!((v.x.abs() - 0.75).abs() < 1e-12);
            assert!((v.y.abs() - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn offset_collapse_returns_none() {
        let poly = ConvexPolygon::new(vec![
            v(-1.0, -1.0),
            v(1.0, -1.0),
            v(1.0, 1.0),
            v(-1.0, 1.0),
        ])
        .unwrap();
        assert!(poly.offset_inward(1.5).is_none());
    }

    #[test]
    fn offset_vertices_stay_inside_original() {
        let poly = ConvexPolygon::new(vec![
            v(0.0, 0.0),
            v(3.0, -0.2),
            v(4.0, 2.0),
            v(1.0, 3.0),
            v(-0.5, 1.5),
        ])
        .unwrap();
        let inner = poly.offset_inward(0.3).unwrap();
        for v in inner.vertices() {
            assert!(poly.contains(*v));
            // Every original edge is at least the offset away.
            for (a, b) in poly.edges() {
                assert!(Segment { a, b }.distance_to_point(*v) >= 0.3 - 1e-9);
            }
        }
    }

    #[test]
    fn beam_point_matches_polar_formula() {
        let scan = EgoCircle::new(
            -PI / 4.0,
            PI / 4.0,
            6.0,
            vec![2.0_f64.sqrt(), 2.0, 2.0_f64.sqrt()],
        )
        .unwrap();
        assert!((scan.beam_point(0) - v(1.0, -1.0)).norm() < 1e-12);
        assert!((scan.beam_point(1) - v(2.0, 0.0)).norm() < 1e-12);
        assert!((scan.beam_point(2) - v(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn beam_point_roundtrips_through_polar() {
        let scan = EgoCircle::new(-PI, 2.0 * PI / 360.0, 8.0, vec![3.0; 360]).unwrap();
        for i in (0..360).step_by(7) {
            let p = scan.beam_point(i);
            assert!((p.norm() - scan.ranges[i]).abs() < 1e-12);
            assert!((wrap_angle(p.y.atan2(p.x) - scan.beam_angle(i))).abs() < 1e-12);
        }
    }

    #[test]
    fn egocircle_rejects_bad_ranges() {
        assert!(EgoCircle::new(0.0, 0.1, 5.0, vec![1.0, 0.0, 2.0]).is_err());
        assert!(EgoCircle::new(0.0, 0.1, 5.0, vec![1.0, 6.0, 2.0]).is_err());
        assert!(EgoCircle::new(0.0, 0.1, 5.0, vec![]).is_err());
    }

    #[test]
    fn largest_centered_disc_takes_min_range() {
        let scan = EgoCircle::new(0.0, 0.1, 5.0, vec![2.0; 63]).unwrap();
        let d = largest_centered_disc(&scan);
        assert_eq!(d.radius, 2.0);
        assert_eq!(d.center, v(0.0, 0.0));

        let mut ranges = vec![4.0; 63];
        ranges[17] = 0.9;
        let scan = EgoCircle::new(0.0, 0.1, 5.0, ranges).unwrap();
        assert_eq!(largest_centered_disc(&scan).radius, 0.9);
    }

    #[test]
    fn region_union_membership() {
        let poly = ConvexPolygon::new(vec![v(0.0, 1.0), v(2.0, 1.0), v(2.0, 4.0), v(0.0, 4.0)])
            .unwrap();
        let disc = Disc::new(v(0.0, 0.0), 1.5).unwrap();
        assert!(point_in_region(v(1.0, 3.0), &poly, &disc)); // polygon only
        assert!(point_in_region(v(-1.0, 0.0), &poly, &disc)); // disc only
        assert!(point_in_region(v(1.0, 1.0), &poly, &disc)); // both
        assert!(!point_in_region(v(-2.0, 3.0), &poly, &disc));
        // Boundary of the disc is inside (closed sets).
        assert!(point_in_region(v(-1.5, 0.0), &poly, &disc));
    }
}

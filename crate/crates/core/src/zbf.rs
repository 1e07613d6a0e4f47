//! Shallow-ReLU barrier function over a keyhole region.
//!
//! The barrier h(x) = alpha . phi(x) + b combines fifteen fixed monomials
//! of six ReLU primitives: five half-plane units R_i = ReLU(c_i.x + d_i)
//! (the two inflated gap sides, the chord through the arc points, and two
//! optional far-chain lines) and one circle unit R_c = ReLU(r^2 - |x-x_c|^2).
//! The coefficients are fit per keyhole by a small linear program that
//! pushes h below -1 on boundary samples and above +1 on their inward
//! eps-displacements, minimizing the coefficient sum.
//!
//! The LP is solved through its dual (16 rows regardless of sample count,
//! feasible slack start, primal recovered from the row multipliers); a
//! hard-infeasible fit falls back to a soft-margin variant (bounded dual
//! variables) and marks the model degraded.

use crate::gaps::InflatedKeyhole;
use crate::geometry::{perp, Disc, Vec2};
use crate::simplex::{LpError, LpProblem, LpSolution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of ReLU line units.
pub const N_LINES: usize = 5;
/// Number of monomial features.
pub const N_FEATURES: usize = 15;

/// Weight on constraint violations in the soft-margin fallback.
const SOFT_MARGIN_WEIGHT: f64 = 1e3;

#[derive(Debug, Error, PartialEq)]
pub enum ZbfError {
    #[error("keyhole side is degenerate")]
    DegenerateSide,
    #[error("boundary sampling produced an empty set")]
    EmptySampleSet,
    #[error("coefficient fit failed numerically")]
    SolverFailure,
}

/// Half-plane unit c.x + d, oriented positive toward the region interior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineCoef {
    pub c: Vec2,
    pub d: f64,
}

impl LineCoef {
    pub fn eval(&self, x: Vec2) -> f64 {
        self.c.dot(&x) + self.d
    }

    /// Through two points, positive side chosen to contain `interior`.
    fn through(a: Vec2, b: Vec2, interior: Vec2) -> Result<Self, ZbfError> {
        let dir = b - a;
        if dir.norm() < 1e-12 {
            return Err(ZbfError::DegenerateSide);
        }
        let mut c = perp(dir / dir.norm());
        let mut d = -c.dot(&a);
        if c.dot(&interior) + d < 0.0 {
            c = -c;
            d = -d;
        }
        Ok(LineCoef { c, d })
    }

    /// Placeholder for an inactive line: constant ReLU input 1 everywhere,
    /// so dependent monomials reduce to their remaining factors.
    fn inactive() -> Self {
        LineCoef { c: Vec2::zeros(), d: 1.0 }
    }
}

/// Fixed geometric inputs of the feature map: the five lines with their
/// activity mask and the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZbfGeometry {
    pub lines: [LineCoef; N_LINES],
    pub active: [bool; N_LINES],
    pub center: Vec2,
    pub radius: f64,
}

impl ZbfGeometry {
    /// Lines of an inflated keyhole: 1 and 2 support the gap sides, 3
    /// runs through the two arc points, 4 and 5 support far-chain edges
    /// and stay inactive while the far boundary is a single segment. All
    /// signs are oriented positive toward the polygon centroid.
    pub fn from_keyhole(k: &InflatedKeyhole) -> Result<Self, ZbfError> {
        let interior = k.polygon.centroid();
        let line1 = LineCoef::through(k.side_left.a, k.side_left.b, interior)?;
        let line2 = LineCoef::through(k.side_right.a, k.side_right.b, interior)?;
        let line3 = LineCoef::through(k.arc_left, k.arc_right, interior)?;
        let mut lines = [line1, line2, line3, LineCoef::inactive(), LineCoef::inactive()];
        let mut active = [true, true, true, false, false];
        // A far boundary made of several edges (polygon with more than
        // four vertices) contributes its two outermost edges as lines 4/5.
        let verts = k.polygon.vertices();
        if verts.len() > 4 {
            let closest = |p: Vec2| {
                (0..verts.len())
                    .min_by(|&i, &j| {
                        (verts[i] - p).norm().total_cmp(&(verts[j] - p).norm())
                    })
                    .unwrap()
            };
            let gl = closest(k.side_left.a);
            let gr = closest(k.side_right.a);
            let n = verts.len();
            // Edge leaving g_l away from the side, and edge entering g_r.
            let e4 = (verts[gl], verts[(gl + n - 1) % n]);
            let e5 = (verts[gr], verts[(gr + 1) % n]);
            lines[3] = LineCoef::through(e4.0, e4.1, interior)?;
            lines[4] = LineCoef::through(e5.0, e5.1, interior)?;
            active[3] = true;
            active[4] = true;
        }
        Ok(Self { lines, active, center: k.circle.center, radius: k.circle.radius })
    }

    /// Disc-only geometry (open space, no gap): every line inactive.
    pub fn from_disc(disc: &Disc) -> Self {
        Self {
            lines: [LineCoef::inactive(); N_LINES],
            active: [false; N_LINES],
            center: disc.center,
            radius: disc.radius,
        }
    }

    /// The fifteen monomials in their fixed order.
    pub fn features(&self, x: Vec2) -> [f64; N_FEATURES] {
        let r = [
            self.lines[0].eval(x).max(0.0),
            self.lines[1].eval(x).max(0.0),
            self.lines[2].eval(x).max(0.0),
            self.lines[3].eval(x).max(0.0),
            self.lines[4].eval(x).max(0.0),
        ];
        let rc = (self.radius * self.radius - (x - self.center).norm_squared()).max(0.0);
        [
            r[0],
            r[1],
            r[2],
            rc,
            r[0] * r[1],
            rc * r[0],
            rc * r[1],
            rc * r[2],
            r[0] * r[1] * r[2],
            r[0] * r[3] * r[4],
            r[1] * r[3] * r[4],
            rc * r[0] * r[3],
            rc * r[1] * r[3],
            rc * r[0] * r[1],
            rc * r[0] * r[1] * r[2],
        ]
    }

    /// Gradients of the monomials: product rule over the unit gradients,
    /// with the flat branch (argument <= 0) contributing zero.
    fn feature_gradients(&self, x: Vec2) -> [Vec2; N_FEATURES] {
        let mut r = [0.0; N_LINES];
        let mut g = [Vec2::zeros(); N_LINES];
        for i in 0..N_LINES {
            let v = self.lines[i].eval(x);
            if v > 0.0 {
                r[i] = v;
                g[i] = self.lines[i].c;
            }
        }
        let rc_arg = self.radius * self.radius - (x - self.center).norm_squared();
        let (rc, gc) = if rc_arg > 0.0 {
            (rc_arg, (x - self.center) * -2.0)
        } else {
            (0.0, Vec2::zeros())
        };
        let p2 = |a: usize, b_val: f64, b_grad: Vec2| g[a] * b_val + b_grad * r[a];
        [
            g[0],
            g[1],
            g[2],
            gc,
            p2(0, r[1], g[1]),
            gc * r[0] + g[0] * rc,
            gc * r[1] + g[1] * rc,
            gc * r[2] + g[2] * rc,
            g[0] * (r[1] * r[2]) + g[1] * (r[0] * r[2]) + g[2] * (r[0] * r[1]),
            g[0] * (r[3] * r[4]) + g[3] * (r[0] * r[4]) + g[4] * (r[0] * r[3]),
            g[1] * (r[3] * r[4]) + g[3] * (r[1] * r[4]) + g[4] * (r[1] * r[3]),
            gc * (r[0] * r[3]) + g[0] * (rc * r[3]) + g[3] * (rc * r[0]),
            gc * (r[1] * r[3]) + g[1] * (rc * r[3]) + g[3] * (rc * r[1]),
            gc * (r[0] * r[1]) + g[0] * (rc * r[1]) + g[1] * (rc * r[0]),
            gc * (r[0] * r[1] * r[2])
                + g[0] * (rc * r[1] * r[2])
                + g[1] * (rc * r[0] * r[2])
                + g[2] * (rc * r[0] * r[1]),
        ]
    }
}

/// Paired boundary/interior training points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSet {
    /// Points on the region boundary (barrier pushed to -1).
    pub unsafe_points: Vec<Vec2>,
    /// The same points displaced inward by `epsilon` (pushed to +1).
    pub safe_points: Vec<Vec2>,
    pub epsilon: f64,
}

/// Default inward displacement: 3% of the circle radius.
pub fn default_epsilon(radius: f64) -> f64 {
    0.03 * radius
}

/// Default sample spacing: caps the sample count near 200 while never
/// sampling finer than the displacement itself.
pub fn default_spacing(perimeter: f64, epsilon: f64) -> f64 {
    (perimeter / 200.0).max(epsilon)
}

/// Total length of the sampled boundary: both gap sides plus the circle
/// without its gap-facing arc.
pub fn sampled_perimeter(k: &InflatedKeyhole) -> f64 {
    let (_, gap_extent) = k.gap_arc();
    k.side_left.length()
        + k.side_right.length()
        + k.circle.radius * (2.0 * std::f64::consts::PI - gap_extent)
}

/// Samples the danger boundary of a keyhole: both inflated gap sides and
/// the circle minus the gap-facing arc, at the given arclength spacing.
/// Safe twins are displaced inward by `epsilon` (toward the circle center
/// on the circle, along the interior line normal on the sides); pairs
/// whose displaced twin escapes the region (tight polygon corners) are
/// dropped.
pub fn sample_boundary(
    k: &InflatedKeyhole,
    epsilon: f64,
    spacing: f64,
) -> Result<SampleSet, ZbfError> {
    let mut unsafe_points = Vec::new();
    let mut safe_points = Vec::new();
    let interior = k.polygon.centroid();

    for side in [&k.side_left, &k.side_right] {
        let len = side.length();
        let dir = side.direction();
        let mut normal = perp(dir);
        if normal.dot(&(interior - side.a)) < 0.0 {
            normal = -normal;
        }
        let n = (len / spacing).ceil() as usize;
        for i in 0..n {
            let u = side.a + dir * (i as f64 * spacing);
            let s = u + normal * epsilon;
            if k.contains(s) {
                unsafe_points.push(u);
                safe_points.push(s);
            }
        }
    }

    let (arc_start, gap_extent) = k.gap_arc();
    let tau = 2.0 * std::f64::consts::PI;
    let danger_extent = tau - gap_extent;
    let arc_len = k.circle.radius * danger_extent;
    let n = (arc_len / spacing).ceil() as usize;
    // The danger arc runs counter-clockwise from the right arc point back
    // around to the left one.
    let start = arc_start + gap_extent;
    for i in 0..n {
        let a = start + i as f64 * spacing / k.circle.radius;
        let dirv = Vec2::new(a.cos(), a.sin());
        unsafe_points.push(k.circle.center + dirv * k.circle.radius);
        safe_points.push(k.circle.center + dirv * (k.circle.radius - epsilon));
    }

    if unsafe_points.is_empty() {
        return Err(ZbfError::EmptySampleSet);
    }
    Ok(SampleSet { unsafe_points, safe_points, epsilon })
}

/// Samples a full circle boundary (open-space fallback).
pub fn sample_disc(disc: &Disc, epsilon: f64, spacing: f64) -> Result<SampleSet, ZbfError> {
    let len = 2.0 * std::f64::consts::PI * disc.radius;
    let n = (len / spacing).ceil() as usize;
    if n == 0 {
        return Err(ZbfError::EmptySampleSet);
    }
    let mut unsafe_points = Vec::with_capacity(n);
    let mut safe_points = Vec::with_capacity(n);
    for i in 0..n {
        let a = i as f64 * spacing / disc.radius;
        let dirv = Vec2::new(a.cos(), a.sin());
        unsafe_points.push(disc.center + dirv * disc.radius);
        safe_points.push(disc.center + dirv * (disc.radius - epsilon));
    }
    Ok(SampleSet { unsafe_points, safe_points, epsilon })
}

/// Trained barrier model: geometry plus fitted coefficients. `degraded`
/// marks a soft-margin fallback fit whose margins may be violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZbfModel {
    pub geometry: ZbfGeometry,
    pub alphas: [f64; N_FEATURES],
    pub b: f64,
    pub degraded: bool,
}

impl ZbfModel {
    pub fn eval(&self, x: Vec2) -> f64 {
        let phi = self.geometry.features(x);
        self.alphas.iter().zip(phi.iter()).map(|(a, f)| a * f).sum::<f64>() + self.b
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let grads = self.geometry.feature_gradients(x);
        let mut g = Vec2::zeros();
        for i in 0..N_FEATURES {
            g += grads[i] * self.alphas[i];
        }
        g
    }

    /// Sum of the fitted coefficients (the fit's objective value).
    pub fn coefficient_sum(&self) -> f64 {
        self.alphas.iter().sum()
    }

    /// The same barrier expressed in a frame shifted by `offset` (model
    /// trained at the origin, evaluated in world coordinates).
    pub fn translated(&self, offset: Vec2) -> ZbfModel {
        let mut geometry = self.geometry;
        for line in geometry.lines.iter_mut() {
            line.d -= line.c.dot(&offset);
        }
        geometry.center += offset;
        ZbfModel { geometry, ..*self }
    }
}

/// Fits the barrier to the samples with margins at +/-1.
pub fn train(samples: &SampleSet, geometry: &ZbfGeometry) -> Result<ZbfModel, ZbfError> {
    train_with_margin(samples, geometry, 1.0)
}

/// Fits with margins at +/-`margin`: minimizes the coefficient sum
/// subject to h <= -margin on unsafe points, h >= +margin on safe points,
/// alphas >= 0 and b <= 0. Infeasible fits rerun with violations allowed
/// at a large penalty and come back marked degraded.
pub fn train_with_margin(
    samples: &SampleSet,
    geometry: &ZbfGeometry,
    margin: f64,
) -> Result<ZbfModel, ZbfError> {
    if samples.unsafe_points.is_empty() || samples.safe_points.is_empty() {
        return Err(ZbfError::EmptySampleSet);
    }
    // Decision variables x = [alpha_1..15, beta] with b = -beta, all >= 0.
    // Unsafe point u: -phi(u).alpha + beta >= margin.
    // Safe point s:    phi(s).alpha - beta >= margin.
    // The dual (maximize margin * sum y s.t. A^T y <= cost, y >= 0) has
    // only 16 rows and a feasible all-slack start, so solve that and read
    // the primal from the row multipliers.
    let n_vars = N_FEATURES + 1;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(
        samples.unsafe_points.len() + samples.safe_points.len() + n_vars,
    );
    for u in &samples.unsafe_points {
        let phi = geometry.features(*u);
        let mut col = Vec::with_capacity(n_vars);
        col.extend(phi.iter().map(|f| -f));
        col.push(1.0);
        cols.push(col);
    }
    for s in &samples.safe_points {
        let phi = geometry.features(*s);
        let mut col: Vec<f64> = phi.to_vec();
        col.push(-1.0);
        cols.push(col);
    }
    let n_samples = cols.len();
    for i in 0..n_vars {
        let mut slack = vec![0.0; n_vars];
        slack[i] = 1.0;
        cols.push(slack);
    }
    let mut rhs = vec![1.0; N_FEATURES];
    rhs.push(0.0); // beta has zero objective cost
    let costs: Vec<f64> =
        (0..cols.len()).map(|j| if j < n_samples { -margin } else { 0.0 }).collect();
    let slack_basis: Vec<usize> = (n_samples..n_samples + n_vars).collect();

    let make_problem = |upper_bound: f64| LpProblem {
        cols: cols.clone(),
        b: rhs.clone(),
        c: costs.clone(),
        upper: (0..n_samples + n_vars)
            .map(|j| if j < n_samples { upper_bound } else { f64::INFINITY })
            .collect(),
    };

    let (solution, degraded) = match crate::simplex::solve_with_basis(
        &make_problem(f64::INFINITY),
        slack_basis.clone(),
    ) {
        Ok(sol) => (sol, false),
        Err(LpError::Unbounded) => {
            let sol =
                crate::simplex::solve_with_basis(&make_problem(SOFT_MARGIN_WEIGHT), slack_basis)
                    .map_err(|_| ZbfError::SolverFailure)?;
            (sol, true)
        }
        Err(_) => return Err(ZbfError::SolverFailure),
    };
    let LpSolution { row_multipliers, .. } = solution;
    let mut alphas = [0.0; N_FEATURES];
    for i in 0..N_FEATURES {
        alphas[i] = (-row_multipliers[i]).max(0.0);
    }
    let beta = (-row_multipliers[N_FEATURES]).max(0.0);
    Ok(ZbfModel { geometry: *geometry, alphas, b: -beta, degraded })
}

/// One-call barrier synthesis for a keyhole with default sampling.
pub fn synthesize_zbf(k: &InflatedKeyhole) -> Result<ZbfModel, ZbfError> {
    let geometry = ZbfGeometry::from_keyhole(k)?;
    let eps = default_epsilon(k.circle.radius);
    let spacing = default_spacing(sampled_perimeter(k), eps);
    let samples = sample_boundary(k, eps, spacing)?;
    train(&samples, &geometry)
}

/// One-call barrier synthesis for open space: the circle alone.
pub fn synthesize_disc_zbf(disc: &Disc) -> Result<ZbfModel, ZbfError> {
    let geometry = ZbfGeometry::from_disc(disc);
    let eps = default_epsilon(disc.radius);
    let spacing = default_spacing(2.0 * std::f64::consts::PI * disc.radius, eps);
    let samples = sample_disc(disc, eps, spacing)?;
    train(&samples, &geometry)
}

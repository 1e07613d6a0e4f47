//! Point-wise barrier-based velocity filter.
//!
//! The last safety layer between the tracker and the actuators: a tiny QP
//! on a single-integrator abstraction finds the velocity closest to the
//! requested one that still satisfies the barrier decrease condition
//! grad_h(x) . u >= -gamma * h(x) inside a velocity box, and the result is
//! mapped back to unicycle commands by splitting it into a heading
//! correction and a forward speed that fades as the correction grows.
//!
//! With two decision variables and at most five inequalities the QP is
//! solved exactly by enumerating active sets: the unconstrained point, all
//! single-constraint projections and all pairwise intersections.

use crate::geometry::{cross, Pose2, Twist, Vec2};
use crate::zbf::ZbfModel;
use serde::{Deserialize, Serialize};

/// Filter gains and limits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CbfConfig {
    /// Class-K slope of the barrier condition (1/s).
    pub gamma: f64,
    /// Heading correction gain (1/s).
    pub k_omega: f64,
    /// Heading error at which forward speed reaches zero (rad).
    pub theta_max: f64,
    /// Isotropic velocity box half-width: |u_x|, |u_y| <= v_bounds (m/s).
    pub v_bounds: f64,
}

impl Default for CbfConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            k_omega: 2.0,
            theta_max: std::f64::consts::FRAC_PI_3,
            v_bounds: 1.0,
        }
    }
}

/// QP answer; `infeasible` marks the fallback when the barrier half-plane
/// excludes the entire velocity box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafeVelocity {
    pub u: Vec2,
    pub infeasible: bool,
}

/// Filter output plus the propagated infeasibility flag for logging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilteredCommand {
    pub twist: Twist,
    pub violation: bool,
}

const FEAS_TOL: f64 = 1e-9;

/// Minimizes |u - u_r|^2 subject to grad_h(x).u >= -gamma h(x) and the
/// velocity box, by exact active-set enumeration. When the constraint set
/// is empty the box vertex maximizing grad_h.u is returned and flagged
/// (with a zero gradient the clamped request is returned instead).
pub fn solve_qp(u_r: Vec2, x: Vec2, zbf: &ZbfModel, cfg: &CbfConfig) -> SafeVelocity {
    let h = zbf.eval(x);
    let a = zbf.gradient(x);
    let v = cfg.v_bounds;

    // Rows g.u <= c: the negated barrier condition plus four box faces.
    let mut rows: Vec<(Vec2, f64)> = vec![
        (Vec2::new(1.0, 0.0), v),
        (Vec2::new(-1.0, 0.0), v),
        (Vec2::new(0.0, 1.0), v),
        (Vec2::new(0.0, -1.0), v),
    ];
    let grad_live = a.norm() > 1e-12;
    if grad_live {
        rows.push((-a, cfg.gamma * h));
    } else if cfg.gamma * h < 0.0 {
        // Vacuous gradient but a negative barrier: nothing satisfies the
        // condition; fall back to the clamped request.
        return SafeVelocity {
            u: Vec2::new(u_r.x.clamp(-v, v), u_r.y.clamp(-v, v)),
            infeasible: true,
        };
    }

    let feasible =
        |u: Vec2| rows.iter().all(|(g, c)| g.dot(&u) <= c + FEAS_TOL) && u.x.is_finite() && u.y.is_finite();

    let mut best: Option<(f64, Vec2)> = None;
    let mut consider = |u: Vec2| {
        if feasible(u) {
            let d = (u - u_r).norm_squared();
            if best.map_or(true, |(bd, _)| d < bd - 1e-15) {
                best = Some((d, u));
            }
        }
    };

    consider(u_r);
    for (g, c) in &rows {
        let n2 = g.norm_squared();
        if n2 > 1e-18 {
            consider(u_r + g * ((c - g.dot(&u_r)) / n2));
        }
    }
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (gi, ci) = rows[i];
            let (gj, cj) = rows[j];
            let det = cross(gi, gj);
            if det.abs() > 1e-12 {
                let ux = (ci * gj.y - cj * gi.y) / det;
                let uy = (gi.x * cj - gj.x * ci) / det;
                consider(Vec2::new(ux, uy));
            }
        }
    }

    match best {
        Some((_, u)) => SafeVelocity { u, infeasible: false },
        None => {
            // The barrier half-plane misses the whole box: steepest
            // recovery is the vertex maximizing grad_h . u.
            let mut vertex = Vec2::new(-v, -v);
            let mut score = f64::NEG_INFINITY;
            for sx in [-1.0, 1.0] {
                for sy in [-1.0, 1.0] {
                    let cand = Vec2::new(sx * v, sy * v);
                    let s = a.dot(&cand);
                    if s > score {
                        score = s;
                        vertex = cand;
                    }
                }
            }
            SafeVelocity { u: vertex, infeasible: true }
        }
    }
}

/// Splits the safe velocity into unicycle commands: the heading error
/// between request and answer drives the turn rate, and forward speed
/// fades linearly to zero as that error approaches `theta_max`.
pub fn map_to_unicycle(u_safe: Vec2, u_r_vec: Vec2, w_r: f64, cfg: &CbfConfig) -> Twist {
    let dtheta = if u_safe.norm() < 1e-12 || u_r_vec.norm() < 1e-12 {
        0.0
    } else {
        cross(u_r_vec, u_safe).atan2(u_r_vec.dot(&u_safe))
    };
    let w = w_r + cfg.k_omega * dtheta;
    let v = (1.0 - dtheta.abs() / cfg.theta_max).max(0.0) * u_safe.norm();
    Twist::new(v, w)
}

/// End-to-end filter: forms the velocity request from the commanded speed
/// along the current heading, solves the QP and maps back.
pub fn filter(nmpc_cmd: Twist, pose: Pose2, zbf: &ZbfModel, cfg: &CbfConfig) -> FilteredCommand {
    let u_r_vec = pose.heading() * nmpc_cmd.v;
    let qp = solve_qp(u_r_vec, pose.position(), zbf, cfg);
    FilteredCommand {
        twist: map_to_unicycle(qp.u, u_r_vec, nmpc_cmd.w, cfg),
        violation: qp.infeasible,
    }
}

//! Receding-horizon tracking of a synthesized path under a barrier
//! constraint.
//!
//! The selected Bézier path is first time-parameterized into a pose/twist
//! reference at the planner rate. A small SQP then tracks a window of that
//! reference with a forward-Euler unicycle model: states are eliminated by
//! single shooting, each iteration solves a dense convex QP (Gauss-Newton
//! Hessian, box/rate/trust bounds, linearized barrier rows) through
//! Hildreth's dual coordinate descent, and an L1 merit line search accepts
//! steps. Barrier rows that render the QP infeasible are softened with a
//! large penalty; everything else stays hard.

use crate::geometry::{wrap_angle, Pose2, Twist, Vec2};
use crate::zbf::ZbfModel;
use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Penalty weight used when barrier rows must be softened.
const BARRIER_PENALTY: f64 = 1e4;
/// Levenberg regularization added to the Gauss-Newton Hessian.
const HESSIAN_DAMPING: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum NmpcError {
    #[error("path has no length to parameterize")]
    ZeroLengthPath,
    #[error("reference window shorter than the horizon")]
    WindowTooShort,
    #[error("non-finite input")]
    NonFinite,
    #[error("configuration violates its invariants")]
    BadConfig,
}

/// Time-stamped pose/twist reference sampled from a path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceTrajectory {
    pub poses: Vec<Pose2>,
    pub twists: Vec<Twist>,
    pub dt: f64,
}

impl ReferenceTrajectory {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Horizon window starting at `start`, padded with the final pose and
    /// a zero twist once the reference runs out.
    pub fn window(&self, start: usize, n: usize) -> (Vec<Pose2>, Vec<Twist>) {
        let mut poses = Vec::with_capacity(n);
        let mut twists = Vec::with_capacity(n);
        let last = *self.poses.last().expect("non-empty reference");
        for k in 0..n {
            let i = start + k;
            if i < self.poses.len() {
                poses.push(self.poses[i]);
                twists.push(if i + 1 < self.poses.len() { self.twists[i] } else { Twist::ZERO });
            } else {
                poses.push(last);
                twists.push(Twist::ZERO);
            }
        }
        (poses, twists)
    }

    /// The same trajectory expressed in a frame shifted by `offset`
    /// (positions move; headings, twists and timing are unchanged).
    pub fn translated(&self, offset: Vec2) -> Self {
        let mut out = self.clone();
        for p in &mut out.poses {
            p.x += offset.x;
            p.y += offset.y;
        }
        out
    }

    /// Worst mismatch between stored poses and a one-step Euler rollout of
    /// the stored twists, relative to the step length.
    pub fn max_consistency_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.poses.len().saturating_sub(1) {
            let pred = unicycle_step(self.poses[k], self.twists[k], self.dt);
            let step = (self.twists[k].v.abs() * self.dt).max(1e-9);
            let pos_err = (pred.position() - self.poses[k + 1].position()).norm();
            let ang_step = (self.twists[k].w.abs() * self.dt).max(1e-9);
            let ang_err = wrap_angle(pred.theta - self.poses[k + 1].theta).abs();
            worst = worst.max(pos_err / step).max(ang_err / ang_step.max(step));
        }
        worst
    }
}

/// Tracker configuration: horizon, discretization, weights and bounds.
/// The control-change bounds are accelerations (per second); a step-to-step
/// change is limited by `a_ub * dt`. Only the upper change bound binds: a
/// positive lower bound on |du| would forbid steady cruise, so it is fixed
/// at zero.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NmpcConfig {
    pub n: usize,
    pub dt: f64,
    /// State weights (x, y, theta).
    pub q: [f64; 3],
    /// Control weights (v, w).
    pub r: [f64; 2],
    pub u_lb: Twist,
    pub u_ub: Twist,
    /// Magnitude bound on control change per second (v and w axes).
    pub a_ub: Twist,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for NmpcConfig {
    fn default() -> Self {
        Self {
            n: 6,
            dt: 0.1,
            q: [10.0, 10.0, 1.0],
            r: [1.0, 0.25],
            u_lb: Twist::new(-0.2, -2.0),
            u_ub: Twist::new(1.0, 2.0),
            a_ub: Twist::new(4.0, 12.0),
            max_iters: 30,
            tol: 1e-6,
        }
    }
}

impl NmpcConfig {
    fn validate(&self) -> Result<(), NmpcError> {
        let ordered = self.u_lb.v <= self.u_ub.v && self.u_lb.w <= self.u_ub.w;
        let weights_ok = self.q.iter().all(|&w| w >= 0.0) && self.r.iter().all(|&w| w >= 0.0);
        if self.n == 0
            || self.dt <= 0.0
            || !ordered
            || !weights_ok
            || self.a_ub.v < 0.0
            || self.a_ub.w < 0.0
        {
            return Err(NmpcError::BadConfig);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NmpcStatus {
    Converged,
    MaxIters,
    InfeasibleRelaxed,
}

/// Solver output: the control sequence, its exact rollout, the realized
/// tracking cost and the termination status.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NmpcSolution {
    pub controls: Vec<Twist>,
    pub predicted_states: Vec<Pose2>,
    pub cost: f64,
    pub status: NmpcStatus,
    /// SQP iterations spent (diagnostic; warm starts should lower it).
    pub iters: usize,
}

/// Forward-Euler unicycle step with heading normalization.
pub fn unicycle_step(x: Pose2, u: Twist, dt: f64) -> Pose2 {
    Pose2::new(
        x.x + u.v * x.theta.cos() * dt,
        x.y + u.v * x.theta.sin() * dt,
        x.theta + u.w * dt,
    )
}

/// Rolls a control sequence forward from `x0`.
pub fn rollout(x0: Pose2, controls: &[Twist], dt: f64) -> Vec<Pose2> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(x0);
    for u in controls {
        states.push(unicycle_step(*states.last().unwrap(), *u, dt));
    }
    states
}

/// Samples a path at arclength increments of `v_d * dt`: poses take the
/// path tangent, twists are finite differences of the samples.
pub fn time_parameterize(
    path: &crate::bezier::JoinedBezierPath,
    v_d: f64,
    dt: f64,
) -> Result<ReferenceTrajectory, NmpcError> {
    if v_d <= 0.0 || dt <= 0.0 {
        return Err(NmpcError::BadConfig);
    }
    // Fine cumulative-arclength table over the unit parameter.
    const M: usize = 2000;
    let mut cum = Vec::with_capacity(M + 1);
    cum.push(0.0);
    let mut prev = crate::bezier::evaluate(path, 0.0).position();
    for i in 1..=M {
        let p = crate::bezier::evaluate(path, i as f64 / M as f64).position();
        cum.push(cum[i - 1] + (p - prev).norm());
        prev = p;
    }
    let total_len = *cum.last().unwrap();
    if total_len < 1e-9 {
        return Err(NmpcError::ZeroLengthPath);
    }
    let step = v_d * dt;
    let n_steps = (total_len / step - 1e-9).ceil().max(1.0) as usize;

    let mut poses = Vec::with_capacity(n_steps + 1);
    let mut lengths = Vec::with_capacity(n_steps + 1);
    let mut hi = 0usize;
    for k in 0..=n_steps {
        let target = (k as f64 * step).min(total_len);
        while hi < M && cum[hi] < target {
            hi += 1;
        }
        let s = if hi == 0 {
            0.0
        } else {
            let span = cum[hi] - cum[hi - 1];
            let frac = if span > 0.0 { (target - cum[hi - 1]) / span } else { 0.0 };
            ((hi - 1) as f64 + frac) / M as f64
        };
        poses.push(crate::bezier::evaluate(path, s));
        lengths.push(target);
    }

    let mut twists = Vec::with_capacity(poses.len());
    for k in 0..poses.len() - 1 {
        twists.push(Twist::new(
            (lengths[k + 1] - lengths[k]) / dt,
            wrap_angle(poses[k + 1].theta - poses[k].theta) / dt,
        ));
    }
    twists.push(*twists.last().unwrap_or(&Twist::ZERO));
    Ok(ReferenceTrajectory { poses, twists, dt })
}

/// State-transition Jacobians of the Euler step at (x, u).
fn step_jacobians(x: Pose2, u: Twist, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0,
            0.0,
            -u.v * x.theta.sin() * dt,
            0.0,
            1.0,
            u.v * x.theta.cos() * dt,
            0.0,
            0.0,
            1.0,
        ],
    );
    let b = DMatrix::from_row_slice(
        3,
        2,
        &[x.theta.cos() * dt, 0.0, x.theta.sin() * dt, 0.0, 0.0, dt],
    );
    (a, b)
}

/// Tracking cost of a rollout against the reference window.
fn tracking_cost(states: &[Pose2], controls: &[Twist], poses: &[Pose2], twists: &[Twist], cfg: &NmpcConfig) -> f64 {
    let mut cost = 0.0;
    for k in 0..cfg.n {
        let dx = states[k].x - poses[k].x;
        let dy = states[k].y - poses[k].y;
        let dth = wrap_angle(states[k].theta - poses[k].theta);
        cost += cfg.q[0] * dx * dx + cfg.q[1] * dy * dy + cfg.q[2] * dth * dth;
        let du_v = controls[k].v - twists[k].v;
        let du_w = controls[k].w - twists[k].w;
        cost += cfg.r[0] * du_v * du_v + cfg.r[1] * du_w * du_w;
    }
    cost
}

/// Barrier values at the predicted positions for steps 1..=N.
fn barrier_values(states: &[Pose2], zbf: &ZbfModel) -> Vec<f64> {
    states[1..].iter().map(|s| zbf.eval(s.position())).collect()
}

/// L1 merit: tracking cost plus penalized barrier violation.
fn merit(states: &[Pose2], controls: &[Twist], poses: &[Pose2], twists: &[Twist], cfg: &NmpcConfig, zbf: &ZbfModel) -> f64 {
    let cost = tracking_cost(states, controls, poses, twists, cfg);
    let viol: f64 = barrier_values(states, zbf).iter().map(|h| (-h).max(0.0)).sum();
    cost + BARRIER_PENALTY * viol
}

/// Clamps a control sequence into the box and the per-step change bounds
/// (sequentially from `u_prev`).
fn clamp_sequence(controls: &mut [Twist], u_prev: Twist, cfg: &NmpcConfig) {
    let dv = cfg.a_ub.v * cfg.dt;
    let dw = cfg.a_ub.w * cfg.dt;
    let mut prev = Twist::new(
        u_prev.v.clamp(cfg.u_lb.v, cfg.u_ub.v),
        u_prev.w.clamp(cfg.u_lb.w, cfg.u_ub.w),
    );
    for u in controls.iter_mut() {
        u.v = u.v.clamp(prev.v - dv, prev.v + dv).clamp(cfg.u_lb.v, cfg.u_ub.v);
        u.w = u.w.clamp(prev.w - dw, prev.w + dw).clamp(cfg.u_lb.w, cfg.u_ub.w);
        prev = *u;
    }
}

/// Hildreth dual coordinate descent for `min 0.5 d'Hd + g'd  s.t. Gd <= w`.
/// Returns `None` when the constraint set is (numerically) infeasible.
fn hildreth_qp(
    chol: &Cholesky<f64, nalgebra::Dyn>,
    g: &DVector<f64>,
    rows: &[DVector<f64>],
    w: &[f64],
) -> Option<DVector<f64>> {
    let unconstrained = -chol.solve(g);
    let m = rows.len();
    if m == 0 {
        return Some(unconstrained);
    }
    let feasible = rows
        .iter()
        .zip(w)
        .all(|(r, wi)| r.dot(&unconstrained) <= wi + 1e-12);
    if feasible {
        return Some(unconstrained);
    }
    // E = G H^-1 G', d = G H^-1 g + w
    let hinv_gt: Vec<DVector<f64>> = rows.iter().map(|r| chol.solve(r)).collect();
    let mut e = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            e[(i, j)] = rows[i].dot(&hinv_gt[j]);
        }
    }
    let d: Vec<f64> = (0..m).map(|i| rows[i].dot(&chol.solve(g)) + w[i]).collect();
    let mut lambda = vec![0.0f64; m];
    for _sweep in 0..600 {
        let mut max_change = 0.0f64;
        for i in 0..m {
            if e[(i, i)] <= 1e-14 {
                // Degenerate row: infeasible if it demands the impossible.
                if rows[i].norm() <= 1e-12 && w[i] < -1e-9 {
                    return None;
                }
                continue;
            }
            let mut s = d[i];
            for j in 0..m {
                if j != i {
                    s += e[(i, j)] * lambda[j];
                }
            }
            let new = (-s / e[(i, i)]).max(0.0);
            max_change = max_change.max((new - lambda[i]).abs());
            lambda[i] = new;
        }
        if lambda.iter().any(|l| *l > 1e12) {
            return None;
        }
        if max_change < 1e-12 {
            break;
        }
    }
    let mut delta = -g.clone();
    for i in 0..m {
        delta -= rows[i].scale(lambda[i]);
    }
    let delta = chol.solve(&delta);
    // Reject badly violated answers (divergent dual) as infeasible.
    let worst = rows
        .iter()
        .zip(w)
        .map(|(r, wi)| r.dot(&delta) - wi)
        .fold(f64::NEG_INFINITY, f64::max);
    if worst > 1e-5 {
        return None;
    }
    Some(delta)
}

/// Tracks a reference window from `x0` under box, rate and barrier
/// constraints. `warm` (the previous solution) is shifted one step and
/// reused as the initial guess.
pub fn solve(
    x0: Pose2,
    u_prev: Twist,
    ref_poses: &[Pose2],
    ref_twists: &[Twist],
    zbf: &ZbfModel,
    cfg: &NmpcConfig,
    warm: Option<&NmpcSolution>,
) -> Result<NmpcSolution, NmpcError> {
    cfg.validate()?;
    let n = cfg.n;
    if ref_poses.len() < n || ref_twists.len() < n {
        return Err(NmpcError::WindowTooShort);
    }
    let finite = [x0.x, x0.y, x0.theta, u_prev.v, u_prev.w]
        .iter()
        .all(|v| v.is_finite())
        && ref_poses.iter().all(|p| p.x.is_finite() && p.y.is_finite() && p.theta.is_finite())
        && ref_twists.iter().all(|t| t.v.is_finite() && t.w.is_finite());
    if !finite {
        return Err(NmpcError::NonFinite);
    }
    let poses = &ref_poses[..n];
    let twists = &ref_twists[..n];

    // Initial guess: shifted warm start, else the reference twists.
    let mut z: Vec<Twist> = match warm {
        Some(sol) if sol.controls.len() == n => {
            let mut c: Vec<Twist> = sol.controls[1..].to_vec();
            c.push(*sol.controls.last().unwrap());
            c
        }
        _ => twists.to_vec(),
    };
    clamp_sequence(&mut z, u_prev, cfg);

    // The barrier gradient vanishes outside the safe region, so a guess
    // whose rollout already escapes leaves the SQP without a recovery
    // direction. If that happens, start from a maximal-rate braking
    // sequence instead whenever it violates less.
    {
        let guess_states = rollout(x0, &z, cfg.dt);
        if barrier_values(&guess_states, zbf).iter().any(|h| *h < 0.0) {
            let mut braking = vec![Twist::ZERO; n];
            let mut prev = u_prev;
            let dv = cfg.a_ub.v * cfg.dt;
            let dw = cfg.a_ub.w * cfg.dt;
            for u in braking.iter_mut() {
                prev = Twist::new(
                    prev.v + (-prev.v).clamp(-dv, dv),
                    prev.w + (-prev.w).clamp(-dw, dw),
                );
                *u = prev;
            }
            clamp_sequence(&mut braking, u_prev, cfg);
            let braking_states = rollout(x0, &braking, cfg.dt);
            let m_guess = merit(&guess_states, &z, poses, twists, cfg, zbf);
            let m_brake = merit(&braking_states, &braking, poses, twists, cfg, zbf);
            if m_brake < m_guess {
                z = braking;
            }
        }
    }

    let nv = 2 * n;
    let dv_max = cfg.a_ub.v * cfg.dt;
    let dw_max = cfg.a_ub.w * cfg.dt;
    let mut trust = 1.0f64;
    let mut iters_used = 0;
    let mut states = rollout(x0, &z, cfg.dt);
    let mut converged = false;

    for _iter in 0..cfg.max_iters {
        iters_used += 1;
        // Sensitivities S_k = d x_k / d z (3 x nv), built incrementally.
        let mut sens: Vec<DMatrix<f64>> = Vec::with_capacity(n + 1);
        sens.push(DMatrix::zeros(3, nv));
        for k in 0..n {
            let (a, b) = step_jacobians(states[k], z[k], cfg.dt);
            let mut s_next = &a * &sens[k];
            s_next.view_mut((0, 2 * k), (3, 2)).copy_from(&b);
            sens.push(s_next);
        }

        // Gauss-Newton pieces: gradient and Hessian of the tracking cost.
        let mut grad = DVector::zeros(nv);
        let mut hess = DMatrix::zeros(nv, nv);
        for k in 0..n {
            let dx = DVector::from_column_slice(&[
                states[k].x - poses[k].x,
                states[k].y - poses[k].y,
                wrap_angle(states[k].theta - poses[k].theta),
            ]);
            if k > 0 {
                let sq = &sens[k];
                for row in 0..3 {
                    let qr = cfg.q[row];
                    if qr == 0.0 {
                        continue;
                    }
                    let jrow = sq.row(row);
                    grad.axpy(2.0 * qr * dx[row], &jrow.transpose(), 1.0);
                    hess.syger(2.0 * qr, &jrow.transpose(), &jrow.transpose(), 1.0);
                }
            }
            grad[2 * k] += 2.0 * cfg.r[0] * (z[k].v - twists[k].v);
            grad[2 * k + 1] += 2.0 * cfg.r[1] * (z[k].w - twists[k].w);
            hess[(2 * k, 2 * k)] += 2.0 * cfg.r[0];
            hess[(2 * k + 1, 2 * k + 1)] += 2.0 * cfg.r[1];
        }
        for i in 0..nv {
            hess[(i, i)] += HESSIAN_DAMPING;
        }
        let chol = Cholesky::new(hess.clone()).ok_or(NmpcError::NonFinite)?;

        // Linear inequality rows G d <= w around the current iterate.
        let mut rows: Vec<DVector<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        let unit = |i: usize, sign: f64| {
            let mut r = DVector::zeros(nv);
            r[i] = sign;
            r
        };
        for k in 0..n {
            let (iv, iw) = (2 * k, 2 * k + 1);
            // Box and trust-region bounds per variable.
            rows.push(unit(iv, 1.0));
            rhs.push((cfg.u_ub.v - z[k].v).min(trust));
            rows.push(unit(iv, -1.0));
            rhs.push((z[k].v - cfg.u_lb.v).min(trust));
            rows.push(unit(iw, 1.0));
            rhs.push((cfg.u_ub.w - z[k].w).min(trust));
            rows.push(unit(iw, -1.0));
            rhs.push((z[k].w - cfg.u_lb.w).min(trust));
            // Rate bounds against the previous control in the sequence.
            let (pv, pw) = if k == 0 { (u_prev.v, u_prev.w) } else { (z[k - 1].v, z[k - 1].w) };
            let mut rv = DVector::zeros(nv);
            rv[iv] = 1.0;
            if k > 0 {
                rv[iv - 2] = -1.0;
            }
            let dv_now = z[k].v - pv;
            rows.push(rv.clone());
            rhs.push(dv_max - dv_now);
            rows.push(-rv);
            rhs.push(dv_max + dv_now);
            let mut rw = DVector::zeros(nv);
            rw[iw] = 1.0;
            if k > 0 {
                rw[iw - 2] = -1.0;
            }
            let dw_now = z[k].w - pw;
            rows.push(rw.clone());
            rhs.push(dw_max - dw_now);
            rows.push(-rw);
            rhs.push(dw_max + dw_now);
        }
        // Linearized barrier rows: h_k + grad_h . dp_k >= 0 for k = 1..N.
        let mut barrier_rows: Vec<DVector<f64>> = Vec::new();
        let mut barrier_rhs: Vec<f64> = Vec::new();
        for k in 1..=n {
            let p = states[k].position();
            let h = zbf.eval(p);
            let gh = zbf.gradient(p);
            let mut row = DVector::zeros(nv);
            for c in 0..nv {
                row[c] = -(gh.x * sens[k][(0, c)] + gh.y * sens[k][(1, c)]);
            }
            barrier_rows.push(row);
            barrier_rhs.push(h);
        }

        let mut all_rows = rows.clone();
        all_rows.extend(barrier_rows.iter().cloned());
        let mut all_rhs = rhs.clone();
        all_rhs.extend(barrier_rhs.iter().cloned());

        let delta = match hildreth_qp(&chol, &grad, &all_rows, &all_rhs) {
            Some(d) => d,
            None => {
                // Soften the barrier: keep hard bounds, push violated
                // directions into the gradient at the penalty weight.
                let mut g_pen = grad.clone();
                for (row, h) in barrier_rows.iter().zip(&barrier_rhs) {
                    if *h < 0.0 {
                        g_pen += row.scale(BARRIER_PENALTY);
                    }
                }
                match hildreth_qp(&chol, &g_pen, &rows, &rhs) {
                    Some(d) => d,
                    None => break,
                }
            }
        };

        let step_norm = delta.amax();
        if step_norm < cfg.tol {
            converged = true;
            break;
        }

        // Backtracking on the L1 merit; bounds stay feasible for any
        // alpha in (0, 1] because the constraint rows are linear in z.
        let m0 = merit(&states, &z, poses, twists, cfg, zbf);
        let mut alpha = 1.0f64;
        let mut accepted = false;
        for _ in 0..8 {
            let mut z_try = z.clone();
            for k in 0..n {
                z_try[k].v += alpha * delta[2 * k];
                z_try[k].w += alpha * delta[2 * k + 1];
            }
            let states_try = rollout(x0, &z_try, cfg.dt);
            let m_try = merit(&states_try, &z_try, poses, twists, cfg, zbf);
            if m_try < m0 - 1e-12 {
                z = z_try;
                states = states_try;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if accepted {
            if alpha == 1.0 {
                trust = (trust * 1.5).min(2.0);
            }
            if (alpha * step_norm) < cfg.tol {
                converged = true;
                break;
            }
        } else {
            trust *= 0.25;
            if trust < 1e-9 {
                converged = true;
                break;
            }
        }
    }

    clamp_sequence(&mut z, u_prev, cfg);
    let states = rollout(x0, &z, cfg.dt);
    let cost = tracking_cost(&states, &z, poses, twists, cfg);
    let min_h = barrier_values(&states, zbf).into_iter().fold(f64::INFINITY, f64::min);
    let status = if min_h < -1e-6 {
        NmpcStatus::InfeasibleRelaxed
    } else if converged {
        NmpcStatus::Converged
    } else {
        NmpcStatus::MaxIters
    };
    Ok(NmpcSolution { controls: z, predicted_states: states, cost, status, iters: iters_used })
}

/// A barrier that is positive on a huge disc: effectively unconstrained.
pub fn unconstrained_barrier() -> ZbfModel {
    let geometry = crate::zbf::ZbfGeometry::from_disc(&crate::geometry::Disc {
        center: Vec2::zeros(),
        radius: 1e4,
    });
    let mut alphas = [0.0; crate::zbf::N_FEATURES];
    alphas[3] = 1.0;
    ZbfModel { geometry, alphas, b: 0.0, degraded: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bezier::{CubicSegment, JoinedBezierPath};
    use crate::geometry::Disc;
    use crate::zbf::{ZbfGeometry, ZbfModel, N_FEATURES};
    use std::f64::consts::PI;

    fn disc_barrier(radius: f64) -> ZbfModel {
        let geometry = ZbfGeometry::from_disc(&Disc { center: Vec2::zeros(), radius });
        let mut alphas = [0.0; N_FEATURES];
        alphas[3] = 1.0;
        ZbfModel { geometry, alphas, b: 0.0, degraded: false }
    }

    fn straight_path(length: f64, v_d: f64) -> JoinedBezierPath {
        let t = length / v_d;
        JoinedBezierPath {
            first: CubicSegment {
                p0: Vec2::zeros(),
                p1: Vec2::new(length / 3.0, 0.0),
                p2: Vec2::new(2.0 * length / 3.0, 0.0),
                p3: Vec2::new(length, 0.0),
                t_f1: t,
            },
            second: None,
            arc_point: Vec2::new(length, 0.0),
            local_goal: Vec2::new(length, 0.0),
            initial_theta: 0.0,
        }
    }

    #[test]
    fn unicycle_step_hand_values() {
        let a = unicycle_step(Pose2::new(0.0, 0.0, 0.0), Twist::new(1.0, 0.0), 0.1);
        assert!((a.x - 0.1).abs() < 1e-15 && a.y.abs() < 1e-15 && a.theta.abs() < 1e-15);
        let b = unicycle_step(Pose2::new(0.0, 0.0, 0.0), Twist::new(0.0, 1.0), 0.1);
        assert!(b.x.abs() < 1e-15 && b.y.abs() < 1e-15 && (b.theta - 0.1).abs() < 1e-15);
        let c = unicycle_step(Pose2::new(0.0, 0.0, PI / 2.0), Twist::new(2.0, 0.0), 0.1);
        assert!(c.x.abs() < 1e-12 && (c.y - 0.2).abs() < 1e-12 && (c.theta - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn straight_reference_sampling() {
        let path = straight_path(1.0, 0.5);
        let r = time_parameterize(&path, 0.5, 0.1).unwrap();
        assert_eq!(r.poses.len(), 21);
        assert_eq!(r.twists.len(), 21);
        for t in &r.twists {
            assert!((t.v - 0.5).abs() < 1e-9, "v = {}", t.v);
            assert!(t.w.abs() < 1e-9);
        }
        let end = r.poses.last().unwrap();
        assert!((end.x - 1.0).abs() < 1e-6 && end.y.abs() < 1e-12);
        // Duration matches the path's own time span.
        let duration = (r.poses.len() - 1) as f64 * r.dt;
        assert!((duration - path.total_time()).abs() < 0.1 * path.total_time() + 1e-9);
        assert!(r.max_consistency_error() < 0.1);
    }

    #[test]
    fn curved_reference_heading_rate_tracks_curvature() {
        // Cubic approximation of a quarter circle of radius 2.
        let r = 2.0;
        let kappa = 0.55228474983 * r;
        let path = JoinedBezierPath {
            first: CubicSegment {
                p0: Vec2::new(r, 0.0),
                p1: Vec2::new(r, kappa),
                p2: Vec2::new(kappa, r),
                p3: Vec2::new(0.0, r),
                t_f1: (PI / 2.0) * r / 0.5,
            },
            second: None,
            arc_point: Vec2::new(0.0, r),
            local_goal: Vec2::new(0.0, r),
            initial_theta: PI / 2.0,
        };
        let v_d = 0.5;
        let reference = time_parameterize(&path, v_d, 0.1).unwrap();
        let expected_w = v_d / r;
        let interior = &reference.twists[1..reference.twists.len() - 2];
        let mean_w: f64 = interior.iter().map(|t| t.w).sum::<f64>() / interior.len() as f64;
        assert!((mean_w - expected_w).abs() < 0.05 * expected_w, "mean w {mean_w}");
        for t in interior {
            assert!((t.w - expected_w).abs() < 0.15 * expected_w, "w {}", t.w);
        }
        assert!(reference.max_consistency_error() < 0.1);
    }

    #[test]
    fn zero_length_path_is_rejected() {
        let mut path = straight_path(1.0, 0.5);
        path.first.p1 = Vec2::zeros();
        path.first.p2 = Vec2::zeros();
        path.first.p3 = Vec2::zeros();
        assert_eq!(time_parameterize(&path, 0.5, 0.1).unwrap_err(), NmpcError::ZeroLengthPath);
    }

    /// An Euler-exact straight reference: rolling out the twists
    /// reproduces the poses bit-for-bit.
    fn euler_reference(n: usize, v: f64) -> ReferenceTrajectory {
        let dt = 0.1;
        let u = Twist::new(v, 0.0);
        let mut poses = vec![Pose2::new(0.0, 0.0, 0.0)];
        for _ in 0..n {
            poses.push(unicycle_step(*poses.last().unwrap(), u, dt));
        }
        let twists = vec![u; poses.len()];
        ReferenceTrajectory { poses, twists, dt }
    }

    #[test]
    fn on_reference_solution_is_a_fixed_point() {
        let reference = euler_reference(12, 0.5);
        let cfg = NmpcConfig::default();
        let (poses, twists) = reference.window(0, cfg.n);
        let barrier = unconstrained_barrier();
        let sol = solve(
            reference.poses[0],
            Twist::new(0.5, 0.0),
            &poses,
            &twists,
            &barrier,
            &cfg,
            None,
        )
        .unwrap();
        assert_eq!(sol.status, NmpcStatus::Converged);
        assert!(sol.cost <= 1e-8, "cost {}", sol.cost);
        for (u, t) in sol.controls.iter().zip(&twists) {
            assert!((u.v - t.v).abs() < 1e-4 && (u.w - t.w).abs() < 1e-4);
        }
    }

    #[test]
    fn barrier_keeps_predictions_inside_disc() {
        // Reference marches straight out of a disc of radius 0.8. The
        // trained disc model is negative outside, so the linearized rows
        // must brake the rollout near the boundary.
        let dt = 0.1;
        let u = Twist::new(0.5, 0.0);
        let mut poses = vec![Pose2::new(0.6, 0.0, 0.0)];
        for _ in 0..8 {
            poses.push(unicycle_step(*poses.last().unwrap(), u, dt));
        }
        let twists = vec![u; poses.len()];
        let cfg = NmpcConfig::default();
        let barrier =
            crate::zbf::synthesize_disc_zbf(&Disc { center: Vec2::zeros(), radius: 0.8 })
                .unwrap();
        assert!(barrier.eval(Vec2::new(0.9, 0.0)) < 0.0);
        let sol = solve(poses[0], u, &poses[..cfg.n], &twists[..cfg.n], &barrier, &cfg, None)
            .unwrap();
        for s in &sol.predicted_states[1..] {
            assert!(barrier.eval(s.position()) >= -1e-6, "h = {}", barrier.eval(s.position()));
        }
        assert!(sol.cost > 1e-3, "deviation must cost something: {}", sol.cost);
    }

    #[test]
    fn zero_velocity_bound_freezes_position() {
        let reference = euler_reference(12, 0.5);
        let mut cfg = NmpcConfig::default();
        cfg.u_lb.v = 0.0;
        cfg.u_ub.v = 0.0;
        let (poses, twists) = reference.window(0, cfg.n);
        let barrier = unconstrained_barrier();
        let x0 = Pose2::new(0.3, -0.2, 0.4);
        let sol = solve(x0, Twist::ZERO, &poses, &twists, &barrier, &cfg, None).unwrap();
        for s in &sol.predicted_states {
            assert!((s.x - x0.x).abs() < 1e-12 && (s.y - x0.y).abs() < 1e-12);
        }
        for u in &sol.controls {
            assert_eq!(u.v, 0.0);
        }
    }

    #[test]
    fn predictions_are_exact_rollouts() {
        let reference = euler_reference(12, 0.4);
        let cfg = NmpcConfig::default();
        let (poses, twists) = reference.window(2, cfg.n);
        let barrier = disc_barrier(5.0);
        let sol = solve(
            Pose2::new(0.1, 0.05, 0.1),
            Twist::new(0.2, 0.1),
            &poses,
            &twists,
            &barrier,
            &cfg,
            None,
        )
        .unwrap();
        let manual = rollout(sol.predicted_states[0], &sol.controls, cfg.dt);
        assert_eq!(sol.predicted_states.len(), cfg.n + 1);
        for (a, b) in sol.predicted_states.iter().zip(&manual) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.y, b.y);
            assert_eq!(a.theta, b.theta);
        }
    }

    #[test]
    fn bounds_hold_under_aggressive_reference() {
        // Reference far away: the solver slams into the box and rate caps.
        let dt = 0.1;
        let poses: Vec<Pose2> = (0..6).map(|k| Pose2::new(5.0 + k as f64, 5.0, 0.0)).collect();
        let twists = vec![Twist::new(1.0, 0.0); 6];
        let cfg = NmpcConfig::default();
        let barrier = unconstrained_barrier();
        let u_prev = Twist::ZERO;
        let sol =
            solve(Pose2::new(0.0, 0.0, 0.0), u_prev, &poses, &twists, &barrier, &cfg, None)
                .unwrap();
        let mut prev = u_prev;
        for u in &sol.controls {
            assert!(u.v >= cfg.u_lb.v - 1e-9 && u.v <= cfg.u_ub.v + 1e-9);
            assert!(u.w >= cfg.u_lb.w - 1e-9 && u.w <= cfg.u_ub.w + 1e-9);
            assert!((u.v - prev.v).abs() <= cfg.a_ub.v * dt + 1e-9);
            assert!((u.w - prev.w).abs() <= cfg.a_ub.w * dt + 1e-9);
            prev = *u;
        }
        // It should still actually move toward the reference.
        assert!(sol.predicted_states.last().unwrap().x > 0.1);
    }

    #[test]
    fn zero_weights_return_a_feasible_point() {
        let reference = euler_reference(12, 0.5);
        let mut cfg = NmpcConfig::default();
        cfg.q = [0.0; 3];
        cfg.r = [0.0; 2];
        let (poses, twists) = reference.window(0, cfg.n);
        let barrier = unconstrained_barrier();
        let sol = solve(
            reference.poses[0],
            Twist::new(0.5, 0.0),
            &poses,
            &twists,
            &barrier,
            &cfg,
            None,
        )
        .unwrap();
        assert_eq!(sol.cost, 0.0);
        assert_eq!(sol.status, NmpcStatus::Converged);
        let mut prev = Twist::new(0.5, 0.0);
        for u in &sol.controls {
            assert!(u.v >= cfg.u_lb.v - 1e-9 && u.v <= cfg.u_ub.v + 1e-9);
            assert!((u.v - prev.v).abs() <= cfg.a_ub.v * cfg.dt + 1e-9);
            prev = *u;
        }
    }

    #[test]
    fn window_pads_with_final_pose() {
        let reference = euler_reference(4, 0.5);
        let (poses, twists) = reference.window(3, 6);
        assert_eq!(poses.len(), 6);
        let last = reference.poses.last().unwrap();
        for p in &poses[2..] {
            assert_eq!(p.x, last.x);
        }
        for t in &twists[2..] {
            assert_eq!(t.v, 0.0);
        }
    }

    #[test]
    fn warm_starts_do_not_slow_convergence() {
        // Track a curved reference over many steps; warm-started solves
        // must converge at least as fast as cold starts almost always.
        let dt = 0.1;
        let mut poses = vec![Pose2::new(0.0, 0.0, 0.0)];
        let mut twists = Vec::new();
        for k in 0..60 {
            let u = Twist::new(0.5, 0.6 * ((k as f64) * 0.1).sin());
            twists.push(u);
            poses.push(unicycle_step(*poses.last().unwrap(), u, dt));
        }
        twists.push(*twists.last().unwrap());
        let reference = ReferenceTrajectory { poses, twists, dt };
        let cfg = NmpcConfig::default();
        let barrier = unconstrained_barrier();

        let mut x = Pose2::new(0.02, -0.03, 0.05);
        let mut u_prev = Twist::ZERO;
        let mut warm: Option<NmpcSolution> = None;
        let mut wins = 0;
        let mut total = 0;
        for start in 0..40 {
            let (p, t) = reference.window(start, cfg.n);
            let cold = solve(x, u_prev, &p, &t, &barrier, &cfg, None).unwrap();
            let sol = solve(x, u_prev, &p, &t, &barrier, &cfg, warm.as_ref()).unwrap();
            if sol.iters <= cold.iters {
                wins += 1;
            }
            total += 1;
            x = sol.predicted_states[1];
            u_prev = sol.controls[0];
            warm = Some(sol);
        }
        assert!(wins as f64 >= 0.9 * total as f64, "warm wins {wins}/{total}");
    }

    #[test]
    fn short_window_and_nonfinite_inputs_error() {
        let cfg = NmpcConfig::default();
        let barrier = unconstrained_barrier();
        let poses = vec![Pose2::new(0.0, 0.0, 0.0); 3];
        let twists = vec![Twist::ZERO; 3];
        assert_eq!(
            solve(Pose2::new(0.0, 0.0, 0.0), Twist::ZERO, &poses, &twists, &barrier, &cfg, None)
                .unwrap_err(),
            NmpcError::WindowTooShort
        );
        let poses = vec![Pose2::new(0.0, 0.0, 0.0); 6];
        let twists = vec![Twist::ZERO; 6];
        assert_eq!(
            solve(
                Pose2::new(f64::NAN, 0.0, 0.0),
                Twist::ZERO,
                &poses,
                &twists,
                &barrier,
                &cfg,
                None
            )
            .unwrap_err(),
            NmpcError::NonFinite
        );
    }
}

//! The local planning loop: gaps to keyholes to scored candidate paths,
//! hysteresis-based commitment, barrier training for the committed region,
//! time parameterization, receding-horizon tracking, and a velocity safety
//! filter over the committed barrier.
//!
//! All perception-side work happens in a robot-centered, world-aligned
//! frame (the scan's frame); committed artifacts — reference trajectory,
//! barrier model, region, path — are translated into world coordinates so
//! they remain valid as the robot moves under them.

use crate::bezier::{self, JoinedBezierPath, ScoreWeights};
use crate::cbf::{self, CbfConfig, FilteredCommand};
use crate::gaps::{
    construct_keyhole, detect_gaps, inflate_keyhole, polygon_clear_of_returns,
    GapDetectionParams, InflatedKeyhole,
};
use crate::geometry::{largest_centered_disc, wrap_angle, Disc, EgoCircle, Pose2, Twist, Vec2};
use crate::nmpc::{self, NmpcConfig, NmpcSolution, NmpcStatus, ReferenceTrajectory};
use crate::zbf::{synthesize_disc_zbf, synthesize_zbf, ZbfModel};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Tunables of the whole local stack.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Cruise speed used for path timing and parameterization.
    pub v_d: f64,
    /// How far ahead the global waypoint is pulled.
    pub horizon: f64,
    /// A challenger path must beat this fraction of the incumbent's
    /// re-scored cost to replace it.
    pub switch_ratio: f64,
    pub weights: ScoreWeights,
    /// Samples per path when scoring against the scan.
    pub n_score_samples: usize,
    /// Keyhole erosion margin as a fraction of the free-disc radius.
    pub margin_frac: f64,
    /// Absolute floor on that margin, in meters. Without a floor the
    /// margin shrinks with the free disc, so each replan from a closer
    /// vantage certifies a slightly tighter region and the robot can
    /// ratchet itself arbitrarily near an obstacle face.
    pub margin_min: f64,
    /// Replan when the tracked reference pose drifts this far away.
    pub replan_distance: f64,
    /// Replan after this many consecutive relaxed/failed tracker solves.
    pub max_infeasible: usize,
    pub nmpc: NmpcConfig,
    pub cbf: CbfConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            v_d: 0.5,
            horizon: 3.0,
            switch_ratio: 0.8,
            weights: ScoreWeights::default(),
            n_score_samples: 30,
            margin_frac: 0.03,
            margin_min: 0.04,
            replan_distance: 0.6,
            max_infeasible: 2,
            nmpc: NmpcConfig::default(),
            cbf: CbfConfig::default(),
        }
    }
}

/// The region a committed plan is certified for, in world coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanRegion {
    Keyhole(InflatedKeyhole),
    Disc(Disc),
}

/// A committed local plan, fixed in world coordinates until replaced.
#[derive(Debug, Clone)]
pub struct Plan {
    /// Time-parameterized reference the tracker follows.
    pub reference: ReferenceTrajectory,
    /// Barrier model certifying `region`.
    pub zbf: ZbfModel,
    pub region: PlanRegion,
    pub path: JoinedBezierPath,
    /// Robot position at commit time.
    pub anchor: Vec2,
    /// Most recent re-scored cost (hysteresis reference value).
    pub score: f64,
    /// Reference index the tracking window starts at; advances by the
    /// number of reference samples covered by one planning period.
    pub step: usize,
}

impl Plan {
    /// Training band half-width of this plan's barrier, for safety
    /// accounting: logged h may dip this far below zero at most.
    pub fn epsilon(&self) -> f64 {
        let r = match &self.region {
            PlanRegion::Keyhole(k) => k.circle.radius,
            PlanRegion::Disc(d) => d.radius,
        };
        crate::zbf::default_epsilon(r)
    }
}

/// What one planning cycle did, with wall-clock stage costs (the costs are
/// diagnostics only and never feed back into planning).
#[derive(Debug, Clone, Copy)]
pub struct CycleReport {
    /// Whether a plan is committed after this cycle.
    pub has_plan: bool,
    /// Whether this cycle committed a new plan.
    pub replanned: bool,
    /// Latest tracker command (reference input to the safety filter).
    pub cmd: Twist,
    pub gap_s: f64,
    pub path_s: f64,
    /// Candidate paths synthesized and scored this cycle.
    pub n_candidates: usize,
    pub zbf_s: f64,
    /// Barrier trainings this cycle (0 or 1).
    pub n_zbf: usize,
    pub nmpc_s: f64,
    pub cycle_s: f64,
}

/// Sense-plan-track state machine run at the planning rate, plus the
/// safety filter queried at the physics rate.
#[derive(Debug)]
pub struct LocalPlanner {
    pub cfg: PlannerConfig,
    robot_radius: f64,
    plan: Option<Plan>,
    warm: Option<NmpcSolution>,
    infeasible_streak: usize,
    prev_vel_vec: Option<Vec2>,
    last_cmd: Twist,
}

/// Candidate region in the planning frame.
enum Candidate {
    Keyhole(usize),
    Disc(Disc),
}

impl LocalPlanner {
    pub fn new(cfg: PlannerConfig, robot_radius: f64) -> Self {
        Self {
            cfg,
            robot_radius,
            plan: None,
            warm: None,
            infeasible_streak: 0,
            prev_vel_vec: None,
            last_cmd: Twist::ZERO,
        }
    }

    pub fn active_plan(&self) -> Option<&Plan> {
        self.plan.as_ref()
    }

    /// Latest tracker command (zero when no plan is committed).
    pub fn last_command(&self) -> Twist {
        self.last_cmd
    }

    /// Safety-filtered command for the current pose, or None when no plan
    /// (and hence no barrier) is active.
    pub fn filter_command(&self, pose: &Pose2) -> Option<FilteredCommand> {
        self.plan
            .as_ref()
            .map(|p| cbf::filter(self.last_cmd, *pose, &p.zbf, &self.cfg.cbf))
    }

    /// One planning cycle: detect gaps in the scan, synthesize and score a
    /// candidate path per keyhole (or an open-space disc fallback), keep
    /// or replace the committed plan, and advance the tracker. `waypoint`
    /// is the global pull point in world coordinates; None means the known
    /// map has no route and drops any committed plan.
    pub fn plan_cycle(
        &mut self,
        pose: &Pose2,
        vel: Twist,
        scan: &EgoCircle,
        waypoint: Option<Vec2>,
        dt: f64,
    ) -> CycleReport {
        let t_cycle = Instant::now();
        let pos = pose.position();
        let pose_local = Pose2 { x: 0.0, y: 0.0, theta: pose.theta };

        // Start-state derivative estimates for smooth path synthesis.
        let vel_vec = pose.heading() * vel.v;
        let a0 = match self.prev_vel_vec {
            Some(prev) => {
                let mut a = (vel_vec - prev) / dt;
                let cap = self.cfg.nmpc.a_ub.v;
                let n = a.norm();
                if n > cap {
                    a *= cap / n;
                }
                a
            }
            None => Vec2::zeros(),
        };
        self.prev_vel_vec = Some(vel_vec);
        let v0 = vel.v.max(0.0);

        let mut report = CycleReport {
            has_plan: false,
            replanned: false,
            cmd: Twist::ZERO,
            gap_s: 0.0,
            path_s: 0.0,
            n_candidates: 0,
            zbf_s: 0.0,
            n_zbf: 0,
            nmpc_s: 0.0,
            cycle_s: 0.0,
        };

        let Some(wp_world) = waypoint else {
            self.drop_plan();
            self.last_cmd = Twist::ZERO;
            report.cycle_s = t_cycle.elapsed().as_secs_f64();
            return report;
        };
        let wp_local = wp_world - pos;

        // The scoring kill-radius must stay below the robot's current
        // standoff from the nearest scan point: otherwise a single close
        // pass poisons every future candidate (sample 0 sits at the robot)
        // and planning can never resume.
        let standoff = largest_centered_disc(scan).radius;
        let mut weights = self.cfg.weights;
        weights.r_ins = weights.r_ins.min(0.9 * standoff);

        // Gap detection and keyhole construction.
        let t0 = Instant::now();
        let params = GapDetectionParams::for_robot(self.robot_radius, scan.angle_increment);
        let gaps = detect_gaps(scan, &params);
        let mut keyholes: Vec<InflatedKeyhole> = Vec::new();
        for g in &gaps {
            let Ok(k) = construct_keyhole(g, scan, self.robot_radius) else { continue };
            let margin = (self.cfg.margin_frac * k.circle.radius).max(self.cfg.margin_min);
            if let Ok(ik) = inflate_keyhole(&k, self.robot_radius, margin) {
                // Construction verifies the gap sides against the scan but
                // not the far chord, and inflation's mitered vertices can
                // escape the raw region at shallow edge angles — gate every
                // candidate on measured returns clearing its polygon by the
                // same radius-plus-margin the region claims to certify.
                if polygon_clear_of_returns(&ik.polygon, scan, self.robot_radius + margin) {
                    keyholes.push(ik);
                }
            }
        }
        report.gap_s = t0.elapsed().as_secs_f64();

        // One candidate path per keyhole, scored against the scan; the
        // open-space disc fallback only competes when no keyhole works.
        let t0 = Instant::now();
        let goal_pose = Pose2::new(wp_local.x, wp_local.y, 0.0);
        let score = |path: &JoinedBezierPath| {
            bezier::score(path, scan, &goal_pose, &pose_local, &weights, self.cfg.n_score_samples)
        };
        let mut candidates: Vec<(JoinedBezierPath, f64, Candidate)> = Vec::new();
        for (i, k) in keyholes.iter().enumerate() {
            report.n_candidates += 1;
            let Some(goal) = clamp_into_keyhole(k, wp_local) else { continue };
            let Ok(path) = bezier::synthesize(k, goal, &pose_local, v0, a0, self.cfg.v_d) else {
                continue;
            };
            let s = score(&path);
            if s.is_finite() {
                candidates.push((path, s, Candidate::Keyhole(i)));
            }
        }
        if candidates.is_empty() {
            if let Some((path, disc)) = self.disc_fallback(scan, wp_local, &pose_local, v0, a0) {
                report.n_candidates += 1;
                let s = score(&path);
                if s.is_finite() {
                    candidates.push((path, s, Candidate::Disc(disc)));
                }
            }
        }

        // Re-score the incumbent in the current frame and decide whether
        // it may keep flying at all. A fully consumed reference is dead no
        // matter how well it scores: commitment exists to stop mid-flight
        // oscillation, not to hold the robot at a finished path's end.
        let mut incumbent: Option<f64> = None;
        if let Some(plan) = &self.plan {
            let prev_local = plan.path.translated(-pos);
            let prev_score = score(&prev_local);
            let ref_i = plan.step.min(plan.reference.len() - 1);
            let drift = (plan.reference.poses[ref_i].position() - pos).norm();
            // At or past the barrier's band edge the certificate no longer
            // covers the robot's position; the plan cannot keep flying.
            let escaped = plan.zbf.eval(pos) <= -1.0 + 1e-9;
            let dead = !prev_score.is_finite()
                || plan.step >= plan.reference.len()
                || drift > self.cfg.replan_distance
                || escaped
                || self.infeasible_streak >= self.cfg.max_infeasible;
            if dead {
                self.drop_plan();
            } else {
                incumbent = Some(prev_score);
            }
        }
        report.path_s = t0.elapsed().as_secs_f64();

        // Hysteresis: a challenger must clearly beat the incumbent.
        let best = candidates.into_iter().min_by(|a, b| a.1.total_cmp(&b.1));
        let mut committed = false;
        if let Some((path, s, region)) = best {
            let beats = incumbent.map_or(true, |prev| s < self.cfg.switch_ratio * prev);
            if beats {
                let t0 = Instant::now();
                let model = match &region {
                    Candidate::Keyhole(i) => synthesize_zbf(&keyholes[*i]),
                    Candidate::Disc(d) => synthesize_disc_zbf(d),
                };
                report.zbf_s = t0.elapsed().as_secs_f64();
                report.n_zbf = 1;
                if let Ok(model) = model {
                    if let Ok(reference) =
                        nmpc::time_parameterize(&path, self.cfg.v_d, self.cfg.nmpc.dt)
                    {
                        let region_world = match region {
                            Candidate::Keyhole(i) => {
                                PlanRegion::Keyhole(keyholes[i].translated(pos))
                            }
                            Candidate::Disc(d) => PlanRegion::Disc(Disc {
                                center: d.center + pos,
                                radius: d.radius,
                            }),
                        };
                        self.plan = Some(Plan {
                            reference: reference.translated(pos),
                            zbf: model.translated(pos),
                            region: region_world,
                            path: path.translated(pos),
                            anchor: pos,
                            score: s,
                            step: 0,
                        });
                        self.warm = None;
                        self.infeasible_streak = 0;
                        committed = true;
                    }
                }
            }
        }
        if !committed {
            if let Some(plan) = &mut self.plan {
                // The reference is sampled at the tracker's dt; one planning
                // period consumes several samples.
                plan.step += (dt / self.cfg.nmpc.dt).round().max(1.0) as usize;
                if let Some(prev) = incumbent {
                    plan.score = prev;
                }
            }
        }

        // Track the committed reference.
        if let Some(plan) = &self.plan {
            let t0 = Instant::now();
            let (wposes, wtwists) = plan.reference.window(plan.step, self.cfg.nmpc.n);
            let solved = nmpc::solve(
                *pose,
                vel,
                &wposes,
                &wtwists,
                &plan.zbf,
                &self.cfg.nmpc,
                self.warm.as_ref(),
            );
            report.nmpc_s = t0.elapsed().as_secs_f64();
            match solved {
                Ok(sol) => {
                    self.last_cmd = sol.controls[0];
                    self.infeasible_streak = if sol.status == NmpcStatus::InfeasibleRelaxed {
                        self.infeasible_streak + 1
                    } else {
                        0
                    };
                    self.warm = Some(sol);
                }
                Err(_) => {
                    self.last_cmd = Twist::ZERO;
                    self.infeasible_streak += 1;
                    self.warm = None;
                }
            }
            report.has_plan = true;
            report.replanned = committed;
        } else if standoff < self.robot_radius + self.cfg.margin_min + 0.1 {
            // Recovery, wedged flavor: the robot sits too close to a
            // surface for any region to be certifiable, so rotation alone
            // can never bring candidates back. Creep along the combined
            // repulsion of all nearby returns (a single nearest-return
            // bearing flip-flops in a pinch between two surfaces, while
            // the sum points out along the pinch axis), backing up when
            // the escape lies behind, while turning the body axis onto
            // the escape bearing — and only translate when the scan shows
            // room along the direction of travel.
            let mut repel = Vec2::zeros();
            for i in 0..scan.n_beams() {
                let r = scan.ranges[i];
                if r < 0.8 {
                    let a = scan.beam_angle(i);
                    repel -= Vec2::new(a.cos(), a.sin()) * (0.8 - r);
                }
            }
            let away = if repel.norm() > 1e-9 {
                repel.y.atan2(repel.x)
            } else {
                pose.theta + std::f64::consts::PI
            };
            let err = wrap_angle(away - pose.theta);
            let axis_err = if err.abs() <= std::f64::consts::FRAC_PI_2 {
                err
            } else {
                wrap_angle(err - std::f64::consts::PI)
            };
            let mut v = 0.15 * err.cos();
            let motion = if v >= 0.0 { pose.theta } else { pose.theta + std::f64::consts::PI };
            let mut room = f64::INFINITY;
            for i in 0..scan.n_beams() {
                if wrap_angle(scan.beam_angle(i) - motion).abs() <= 0.5 {
                    room = room.min(scan.ranges[i]);
                }
            }
            if room <= self.robot_radius + 0.05 {
                v = 0.0;
            }
            self.last_cmd = Twist { v, w: (2.0 * axis_err).clamp(-1.5, 1.5) };
        } else {
            // Recovery, blind flavor: no certified plan survived but there
            // is room around. Pure rotation moves a disc robot nowhere
            // (collision-free by construction), so sweep the sensor toward
            // the waypoint until candidates come back — with a limited
            // FoV, staring at a blocked bearing would otherwise starve
            // planning forever.
            let bearing = wp_local.y.atan2(wp_local.x);
            let err = wrap_angle(bearing - pose.theta);
            let w = if err.abs() > 0.2 { (2.0 * err).clamp(-1.5, 1.5) } else { 1.5 };
            self.last_cmd = Twist { v: 0.0, w };
        }
        report.cmd = self.last_cmd;
        report.cycle_s = t_cycle.elapsed().as_secs_f64();
        report
    }

    fn drop_plan(&mut self) {
        self.plan = None;
        self.warm = None;
        self.infeasible_streak = 0;
    }

    /// Open-space fallback: a single cubic toward the waypoint clamped
    /// inside the eroded free disc, retried with shorter goals when the
    /// start dynamics push a control point outside.
    fn disc_fallback(
        &self,
        scan: &EgoCircle,
        wp_local: Vec2,
        pose_local: &Pose2,
        v0: f64,
        a0: Vec2,
    ) -> Option<(JoinedBezierPath, Disc)> {
        let raw = largest_centered_disc(scan);
        let margin = (self.cfg.margin_frac * raw.radius).max(self.cfg.margin_min);
        let r = raw.radius - (self.robot_radius + margin);
        if r <= 0.05 {
            return None;
        }
        let disc = Disc { center: Vec2::zeros(), radius: r };
        let dist = wp_local.norm();
        if dist < 1e-3 {
            return None;
        }
        let dir = wp_local / dist;
        for shrink in [0.95, 0.6, 0.35] {
            let goal = dir * dist.min(r * shrink);
            if goal.norm() < 1e-3 {
                continue;
            }
            let Ok(first) = bezier::first_segment(pose_local, v0, a0, goal, self.cfg.v_d) else {
                continue;
            };
            if [first.p0, first.p1, first.p2, first.p3].iter().all(|p| p.norm() <= r + 1e-9) {
                let path = JoinedBezierPath {
                    first,
                    second: None,
                    arc_point: goal,
                    local_goal: goal,
                    initial_theta: pose_local.theta,
                };
                return Some((path, disc));
            }
        }
        None
    }
}

/// Pulls a target into the keyhole along the ray from the region's center
/// (the region is star-shaped about the robot, so the ray's inside portion
/// is a single interval). Returns None for targets so close that no usable
/// path start remains.
fn clamp_into_keyhole(k: &InflatedKeyhole, target: Vec2) -> Option<Vec2> {
    if k.contains(target) {
        return Some(target);
    }
    if !k.contains(Vec2::zeros()) {
        return None;
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if k.contains(target * mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = target * (lo * 0.999);
    (p.norm() > 1e-3).then_some(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EgoCircle;
    use std::f64::consts::PI;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    /// Scan of a wall at 2.5 m with one opening around bearing pi/2 and a
    /// nearer return behind the robot (so the free disc stops short of the
    /// wall and the gap endpoints stay outside it).
    fn gap_scan() -> EgoCircle {
        let mut ranges = vec![2.5; 360];
        for r in ranges.iter_mut().take(291).skip(250) {
            *r = 6.0;
        }
        for r in ranges.iter_mut().take(96).skip(85) {
            *r = 2.0;
        }
        EgoCircle::new(-PI, PI / 180.0, 6.0, ranges).unwrap()
    }

    fn open_scan() -> EgoCircle {
        EgoCircle::new(-PI, PI / 180.0, 5.0, vec![5.0; 360]).unwrap()
    }

    #[test]
    fn clamping_respects_the_region() {
        let scan = gap_scan();
        let params = GapDetectionParams::for_robot(0.2, scan.angle_increment);
        let gaps = detect_gaps(&scan, &params);
        assert!(!gaps.is_empty());
        let k = construct_keyhole(&gaps[0], &scan, 0.2).unwrap();
        let ik = inflate_keyhole(&k, 0.2, 0.05).unwrap();
        // A far target through the gap is pulled back inside.
        let far = v(0.0, 20.0);
        let clamped = clamp_into_keyhole(&ik, far).unwrap();
        assert!(ik.contains(clamped));
        assert!(clamped.norm() < far.norm());
        assert!(clamped.normalize().dot(&far.normalize()) > 0.999, "stays on the ray");
        // An inside target is untouched.
        let near = v(0.0, 1.0);
        assert_eq!(clamp_into_keyhole(&ik, near), Some(near));
    }

    #[test]
    fn open_space_uses_the_disc_fallback_and_commits() {
        let mut planner = LocalPlanner::new(PlannerConfig::default(), 0.2);
        let pose = Pose2::new(0.0, 0.0, 0.0);
        let rep = planner.plan_cycle(&pose, Twist::ZERO, &open_scan(), Some(v(3.0, 0.0)), 0.1);
        assert!(rep.has_plan && rep.replanned);
        assert_eq!(rep.n_zbf, 1);
        let plan = planner.active_plan().unwrap();
        assert!(matches!(plan.region, PlanRegion::Disc(_)));
        assert!(plan.reference.len() > 10);
        // The tracker asks to move forward.
        assert!(rep.cmd.v > 0.05, "cmd {:?}", rep.cmd);
    }

    #[test]
    fn gap_scene_commits_a_keyhole_plan_toward_the_opening() {
        let mut planner = LocalPlanner::new(PlannerConfig::default(), 0.2);
        let pose = Pose2::new(0.0, 0.0, PI / 2.0);
        let rep = planner.plan_cycle(&pose, Twist::ZERO, &gap_scan(), Some(v(0.0, 5.0)), 0.1);
        assert!(rep.has_plan);
        let plan = planner.active_plan().unwrap();
        assert!(matches!(plan.region, PlanRegion::Keyhole(_)));
        // The path climbs toward the opening at bearing pi/2.
        let end = plan.path.end_position();
        assert!(end.y > 1.0, "path end {end:?}");
        // The barrier certifies the robot's own position.
        assert!(plan.zbf.eval(pose.position()) > 0.0);
    }

    #[test]
    fn no_waypoint_drops_the_plan_and_brakes() {
        let mut planner = LocalPlanner::new(PlannerConfig::default(), 0.2);
        let pose = Pose2::new(0.0, 0.0, 0.0);
        let rep = planner.plan_cycle(&pose, Twist::ZERO, &open_scan(), Some(v(3.0, 0.0)), 0.1);
        assert!(rep.has_plan);
        let rep2 = planner.plan_cycle(&pose, Twist::ZERO, &open_scan(), None, 0.1);
        assert!(!rep2.has_plan);
        assert_eq!(rep2.cmd, Twist::ZERO);
        assert!(planner.active_plan().is_none());
        assert!(planner.filter_command(&pose).is_none());
    }

    #[test]
    fn hysteresis_keeps_the_committed_plan_between_cycles() {
        let mut planner = LocalPlanner::new(PlannerConfig::default(), 0.2);
        let pose = Pose2::new(0.0, 0.0, PI / 2.0);
        let rep = planner.plan_cycle(&pose, Twist::ZERO, &gap_scan(), Some(v(0.0, 5.0)), 0.1);
        assert!(rep.replanned);
        // Same situation again: the incumbent survives and the reference
        // window advances instead of retraining a new barrier.
        let rep2 = planner.plan_cycle(&pose, Twist::ZERO, &gap_scan(), Some(v(0.0, 5.0)), 0.1);
        assert!(rep2.has_plan && !rep2.replanned);
        assert_eq!(rep2.n_zbf, 0);
        // One planning period consumes period / tracker-dt samples.
        let cfg = &planner.cfg.nmpc;
        let expect = (0.1 / cfg.dt).round() as usize;
        assert_eq!(planner.active_plan().unwrap().step, expect);
    }

    #[test]
    fn drifting_far_from_the_reference_forces_a_replan() {
        let mut planner = LocalPlanner::new(PlannerConfig::default(), 0.2);
        let pose = Pose2::new(0.0, 0.0, 0.0);
        let rep = planner.plan_cycle(&pose, Twist::ZERO, &open_scan(), Some(v(3.0, 0.0)), 0.1);
        assert!(rep.replanned);
        let anchor_before = planner.active_plan().unwrap().anchor;
        // Teleport the robot sideways beyond the replan distance.
        let moved = Pose2::new(0.0, 2.0, 0.0);
        let rep2 = planner.plan_cycle(&moved, Twist::ZERO, &open_scan(), Some(v(3.0, 2.0)), 0.1);
        assert!(rep2.replanned, "drift must force a fresh commitment");
        let plan = planner.active_plan().unwrap();
        assert_ne!(plan.anchor, anchor_before);
        assert_eq!(plan.anchor, moved.position());
    }

    #[test]
    fn committed_artifacts_live_in_world_coordinates() {
        let mut planner = LocalPlanner::new(PlannerConfig::default(), 0.2);
        let pose = Pose2::new(4.0, -2.0, 0.0);
        let rep = planner.plan_cycle(&pose, Twist::ZERO, &open_scan(), Some(v(7.0, -2.0)), 0.1);
        assert!(rep.has_plan);
        let plan = planner.active_plan().unwrap();
        assert_eq!(plan.anchor, v(4.0, -2.0));
        // Reference starts at the robot's world pose.
        let p0 = plan.reference.poses[0];
        assert!((p0.x - 4.0).abs() < 1e-9 && (p0.y + 2.0).abs() < 1e-9);
        // Barrier is centered on the anchor, not the origin.
        assert!(plan.zbf.eval(v(4.0, -2.0)) > 0.0);
        match &plan.region {
            PlanRegion::Disc(d) => assert_eq!(d.center, v(4.0, -2.0)),
            other => panic!("expected a disc region, got {other:?}"),
        }
    }
}

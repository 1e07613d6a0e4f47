//! Closed-loop episode execution: physics at 50 Hz, planning at 10 Hz,
//! the safety filter every physics step, and outcome/trace accounting.

use super::grid::{global_waypoint, OccupancyGrid};
use super::planner::{LocalPlanner, PlanRegion, PlannerConfig};
use super::world::{
    check_collision, raycast_scan, step_robot, RobotModel, RobotState, ScanMemory, SensorConfig,
    World,
};
use crate::geometry::Twist;
use crate::zbf::ZbfModel;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Everything an episode needs besides the world and its seed label.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub robot: RobotModel,
    pub sensor: SensorConfig,
    pub planner: PlannerConfig,
    /// Physics step in seconds.
    pub dt_sim: f64,
    /// Planning period in seconds (a whole multiple of `dt_sim`).
    pub planning_period: f64,
    /// Reaching this close to the goal ends the episode successfully.
    pub goal_tolerance: f64,
    /// Going this long without any committed plan aborts the episode.
    pub abort_patience: f64,
    /// Wall on simulated time; expiry counts as an abort.
    pub timeout: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            robot: RobotModel::default(),
            sensor: SensorConfig::default(),
            planner: PlannerConfig::default(),
            dt_sim: 0.02,
            planning_period: 0.1,
            goal_tolerance: 0.3,
            abort_patience: 5.0,
            timeout: 120.0,
        }
    }
}

/// How an episode ended. Timeouts count as aborts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Abort,
    Collision,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Abort => "abort",
            Outcome::Collision => "collision",
        }
    }
}

/// One line of an episode trace. Every field is a pure function of the
/// inputs — no wall-clock data — so replays are byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    /// The world the episode ran in (first line).
    World { world: World },
    /// A new plan was committed: its certified region and barrier.
    Plan { t: f64, region: PlanRegion, zbf: ZbfModel },
    /// Post-step robot state; `h` is the active barrier's value there.
    Step {
        t: f64,
        x: f64,
        y: f64,
        theta: f64,
        v: f64,
        w: f64,
        h: Option<f64>,
        intervened: bool,
    },
    /// Final line: the outcome.
    End { t: f64, outcome: Outcome },
}

/// Wall-clock stage totals with event counts, kept outside the trace.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StageTimings {
    pub gap_s: f64,
    /// Planning cycles run.
    pub n_cycles: usize,
    pub path_s: f64,
    /// Candidate paths synthesized and scored.
    pub n_candidates: usize,
    pub zbf_s: f64,
    /// Barrier trainings.
    pub n_zbf: usize,
    pub nmpc_s: f64,
    /// Tracker solves (cycles that held a plan).
    pub n_nmpc: usize,
    pub qp_s: f64,
    /// Safety-filter invocations.
    pub n_qp: usize,
    /// Full planning cycles: gaps through tracking.
    pub cycle_s: f64,
}

impl StageTimings {
    fn mean_ms(total_s: f64, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            1e3 * total_s / n as f64
        }
    }

    pub fn gap_ms(&self) -> f64 {
        Self::mean_ms(self.gap_s, self.n_cycles)
    }

    /// Mean path synthesis + scoring time per candidate gap.
    pub fn path_ms(&self) -> f64 {
        Self::mean_ms(self.path_s, self.n_candidates)
    }

    pub fn zbf_ms(&self) -> f64 {
        Self::mean_ms(self.zbf_s, self.n_zbf)
    }

    pub fn nmpc_ms(&self) -> f64 {
        Self::mean_ms(self.nmpc_s, self.n_nmpc)
    }

    pub fn qp_ms(&self) -> f64 {
        Self::mean_ms(self.qp_s, self.n_qp)
    }

    /// Mean full planning-cycle time.
    pub fn cycle_ms(&self) -> f64 {
        Self::mean_ms(self.cycle_s, self.n_cycles)
    }
}

/// Everything a finished episode reports.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// Seed label of the world this episode ran in.
    pub seed: u64,
    pub outcome: Outcome,
    /// Simulated seconds until the outcome.
    pub sim_time: f64,
    /// Meters driven.
    pub path_length: f64,
    /// Lowest active-barrier value seen at the robot, if one was active.
    pub min_h: Option<f64>,
    /// Physics steps where the filter changed or flagged the command.
    pub filter_interventions: usize,
    pub timings: StageTimings,
    pub trace: Vec<TraceEvent>,
}

impl RunResult {
    /// The trace as JSON Lines, one event per line.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for ev in &self.trace {
            out.push_str(&serde_json::to_string(ev).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }
}

/// Runs one closed-loop episode to its outcome. Planning fires every
/// `planning_period`; the safety filter runs every physics step against
/// the latest tracker command; collision and goal checks follow each step.
pub fn run_episode(world: &World, cfg: &EpisodeConfig, seed: u64) -> RunResult {
    // The global grid is inflated past the bare robot radius: A* paths hug
    // their inflation boundary at corners, and a waypoint the local stack
    // cannot certify a region around (radius + margin, plus room for the
    // open-space fallback disc) drags the robot against obstacle faces.
    let grid = OccupancyGrid::new(world, cfg.robot.radius + cfg.planner.margin_min + 0.1);
    let mut planner = LocalPlanner::new(cfg.planner.clone(), cfg.robot.radius);
    let mut memory = ScanMemory::new();
    let mut state = RobotState { pose: world.start, vel: Twist::ZERO };

    let steps_per_plan = (cfg.planning_period / cfg.dt_sim).round().max(1.0) as usize;
    let n_steps = (cfg.timeout / cfg.dt_sim).ceil() as usize;

    let mut trace = vec![TraceEvent::World { world: world.clone() }];
    let mut timings = StageTimings::default();
    let mut min_h: Option<f64> = None;
    let mut interventions = 0usize;
    let mut path_length = 0.0;
    let mut no_plan_time = 0.0;
    let mut outcome = Outcome::Abort;
    let mut end_time = cfg.timeout;

    for step in 0..n_steps {
        let t = step as f64 * cfg.dt_sim;

        if step % steps_per_plan == 0 {
            let fresh = raycast_scan(world, &state.pose, &cfg.sensor);
            let scan = memory.update(&fresh, &state.pose, &cfg.sensor);
            let waypoint = global_waypoint(&grid, world, &state.pose, cfg.planner.horizon);
            let report =
                planner.plan_cycle(&state.pose, state.vel, &scan, waypoint, cfg.planning_period);

            timings.gap_s += report.gap_s;
            timings.path_s += report.path_s;
            timings.n_candidates += report.n_candidates;
            timings.zbf_s += report.zbf_s;
            timings.n_zbf += report.n_zbf;
            timings.nmpc_s += report.nmpc_s;
            timings.n_nmpc += report.has_plan as usize;
            timings.cycle_s += report.cycle_s;
            timings.n_cycles += 1;

            if report.replanned {
                let plan = planner.active_plan().expect("replanned implies a plan");
                trace.push(TraceEvent::Plan { t, region: plan.region.clone(), zbf: plan.zbf });
            }
            if report.has_plan {
                no_plan_time = 0.0;
            } else {
                no_plan_time += cfg.planning_period;
                if no_plan_time >= cfg.abort_patience {
                    outcome = Outcome::Abort;
                    end_time = t;
                    break;
                }
            }
        }

        let t0 = Instant::now();
        let filtered = planner.filter_command(&state.pose);
        timings.qp_s += t0.elapsed().as_secs_f64();
        let (cmd, intervened) = match filtered {
            Some(fc) => {
                timings.n_qp += 1;
                let raw = planner.last_command();
                let changed = (fc.twist.v - raw.v).abs() > 1e-9 || (fc.twist.w - raw.w).abs() > 1e-9;
                (fc.twist, fc.violation || changed)
            }
            // No barrier to filter against: the planner's command is the
            // plan-less recovery rotation (or zero), which holds position.
            None => (planner.last_command(), false),
        };
        if intervened {
            interventions += 1;
        }

        let prev = state.pose.position();
        state = step_robot(&state, cmd, cfg.dt_sim, &cfg.robot);
        let pos = state.pose.position();
        path_length += (pos - prev).norm();

        let h = planner.active_plan().map(|p| p.zbf.eval(pos));
        if let Some(h) = h {
            min_h = Some(min_h.map_or(h, |m| m.min(h)));
        }
        let t_post = (step + 1) as f64 * cfg.dt_sim;
        trace.push(TraceEvent::Step {
            t: t_post,
            x: state.pose.x,
            y: state.pose.y,
            theta: state.pose.theta,
            v: state.vel.v,
            w: state.vel.w,
            h,
            intervened,
        });

        if check_collision(world, pos, cfg.robot.radius) {
            outcome = Outcome::Collision;
            end_time = t_post;
            break;
        }
        if (pos - world.goal).norm() <= cfg.goal_tolerance {
            outcome = Outcome::Success;
            end_time = t_post;
            break;
        }
    }

    trace.push(TraceEvent::End { t: end_time, outcome });
    RunResult {
        seed,
        outcome,
        sim_time: end_time,
        path_length,
        min_h,
        filter_interventions: interventions,
        timings,
        trace,
    }
}

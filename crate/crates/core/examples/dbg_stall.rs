use gapnav_core::geometry::{Twist, Vec2};
use gapnav_core::sim::*;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let t_end: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(12.0);
    let world = generate_world(WorldKind::Dense, seed, 0.08).unwrap();
    let mut cfg = EpisodeConfig::default();
    cfg.robot.order = RobotOrder::Second;
    cfg.sensor.n_beams = 60;
    cfg.sensor.fov = std::f64::consts::FRAC_PI_3;

    let grid = OccupancyGrid::new(&world, cfg.robot.radius + cfg.planner.margin_min + 0.1);
    let mut planner = LocalPlanner::new(cfg.planner.clone(), cfg.robot.radius);
    let mut memory = ScanMemory::new();
    let mut state = RobotState { pose: world.start, vel: Twist::ZERO };
    let steps_per_plan = (cfg.planning_period / cfg.dt_sim).round() as usize;

    let clearance = |p: Vec2| -> f64 {
        let mut d = world.bounds.wall_clearance(p);
        for o in &world.obstacles {
            d = d.min(o.distance_to_point(p));
        }
        d
    };

    // Points of a committed region: polygon boundary samples + circle rim
    // + interior grid via rejection over the bbox with the zbf.
    let audit = |plan: &Plan, label: &str| {
        let mut worst = f64::INFINITY;
        let mut wp = Vec2::zeros();
        let mut probe = |p: Vec2| {
            let c = clearance(p);
            if c < worst {
                worst = c;
                wp = p;
            }
        };
        match &plan.region {
            PlanRegion::Keyhole(k) => {
                let vs = k.polygon.vertices();
                for i in 0..vs.len() {
                    let a = vs[i];
                    let b = vs[(i + 1) % vs.len()];
                    for s in 0..=20 {
                        probe(a + (b - a) * (s as f64 / 20.0));
                    }
                }
                for i in 0..64 {
                    let ang = i as f64 / 64.0 * std::f64::consts::TAU;
                    probe(k.circle.center + Vec2::new(ang.cos(), ang.sin()) * k.circle.radius);
                }
            }
            PlanRegion::Disc(d) => {
                for i in 0..64 {
                    let ang = i as f64 / 64.0 * std::f64::consts::TAU;
                    probe(d.center + Vec2::new(ang.cos(), ang.sin()) * d.radius);
                }
            }
        }
        if worst < 0.2 - 1e-9 {
            println!(
                "  {label} REGION BREACH: boundary point ({:.3},{:.3}) clearance {:.3} < robot radius",
                wp.x, wp.y, worst
            );
        }
    };

    let mut last_commit = -1.0_f64;
    for step in 0..(t_end / cfg.dt_sim) as usize {
        let t = step as f64 * cfg.dt_sim;
        if step % steps_per_plan == 0 {
            let fresh = raycast_scan(&world, &state.pose, &cfg.sensor);
            let scan = memory.update(&fresh, &state.pose, &cfg.sensor);
            let waypoint = global_waypoint(&grid, &world, &state.pose, cfg.planner.horizon);
            let report = planner.plan_cycle(&state.pose, state.vel, &scan, waypoint, cfg.planning_period);
            let pos = state.pose.position();
            let cl = clearance(pos) - 0.2;
            if report.replanned {
                last_commit = t;
                let plan = planner.active_plan().unwrap();
                println!(
                    "t={t:5.2} pos=({:6.3},{:6.3}) th={:5.2} clear={cl:.3} h={:7.2} commit",
                    pos.x, pos.y, state.pose.theta, plan.zbf.eval(pos)
                );
                audit(plan, "new");
            } else if planner.active_plan().is_none() && t - last_commit > 0.4 {
                println!("t={t:5.2} pos=({:6.3},{:6.3}) clear={cl:.3} NO PLAN", pos.x, pos.y);
            }
            if cl < 0.0 {
                println!("t={t:5.2} COLLIDED pos=({:.3},{:.3}) clear={cl:.3}", pos.x, pos.y);
                break;
            }
        }
        let cmd = planner
            .filter_command(&state.pose)
            .map(|f| f.twist)
            .unwrap_or_else(|| planner.last_command());
        state = step_robot(&state, cmd, cfg.dt_sim, &cfg.robot);
    }
}

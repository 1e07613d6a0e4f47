//! Monte-Carlo benchmark harness: seeded campaigns over generated worlds,
//! per-run CSV rows, aggregate rate/timing summaries, and SVG rendering of
//! episode traces (world, driven path, committed region, barrier zero
//! level-set).
//!
//! Episodes are independent and run on a small worker pool keyed by seed;
//! aggregation happens single-threaded in seed order, so everything except
//! the wall-clock timing columns is deterministic.

use crate::geometry::{Pose2, Vec2};
use crate::sim::{
    generate_world, raycast_scan, run_episode, EpisodeConfig, Outcome, PlanRegion, RunResult,
    SensorConfig, SimError, TraceEvent, World, WorldKind,
};
use crate::zbf::{synthesize_disc_zbf, synthesize_zbf, ZbfModel};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use thiserror::Error;

/// Fixed CSV schema of per-run rows. The five t_* columns are wall-clock
/// means and are the only nondeterministic fields.
pub const CSV_HEADER: &str =
    "seed,outcome,sim_time_s,path_length_m,min_h,t_gap_ms,t_path_ms,t_zbf_ms,t_nmpc_ms,t_qp_ms";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration: {0}")]
    BadConfig(String),
    #[error("world generation failed: {0}")]
    WorldGen(#[from] SimError),
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A whole campaign: scenario family, seed range, and episode settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub kind: WorldKind,
    pub n_runs: usize,
    pub seed_base: u64,
    /// Spawned obstacles per square meter of wall-free area.
    pub density: f64,
    pub episode: EpisodeConfig,
    /// Worker threads; 0 picks the machine's available parallelism.
    pub workers: usize,
    /// Where to write runs.csv and summary.json; in-memory only if unset
    /// (an explicit directory passed to [`run_campaign`] takes precedence).
    pub out_dir: Option<PathBuf>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            kind: WorldKind::Dense,
            n_runs: 50,
            seed_base: 0,
            density: 0.08,
            episode: EpisodeConfig::default(),
            workers: 0,
            out_dir: None,
        }
    }
}

/// Mean and upper percentiles of a per-run timing statistic, milliseconds.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StageStats {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl StageStats {
    /// Percentile summary of per-run means; runs without events for the
    /// stage are skipped.
    fn from_means(mut means: Vec<f64>) -> Self {
        if means.is_empty() {
            return Self::default();
        }
        means.sort_by(f64::total_cmp);
        let n = means.len();
        let pick = |q: f64| means[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
        Self {
            mean_ms: means.iter().sum::<f64>() / n as f64,
            p50_ms: pick(0.50),
            p90_ms: pick(0.90),
            p99_ms: pick(0.99),
            max_ms: means[n - 1],
        }
    }
}

/// Campaign aggregate: outcome rates (exact fractions of runs) and timing
/// statistics with a hardware disclaimer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub n_runs: usize,
    pub success_rate: f64,
    pub abort_rate: f64,
    pub collision_rate: f64,
    pub mean_sim_time_s: f64,
    pub mean_path_length_m: f64,
    pub gap: StageStats,
    pub path: StageStats,
    pub zbf: StageStats,
    pub nmpc: StageStats,
    pub qp: StageStats,
    pub cycle: StageStats,
    pub hardware_note: String,
}

/// Everything a campaign produced, in seed order.
#[derive(Debug)]
pub struct CampaignReport {
    pub summary: CampaignSummary,
    pub results: Vec<RunResult>,
    pub csv: String,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.6}"))
}

/// Renders per-run rows under the fixed header.
pub fn csv_report(results: &[RunResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        let t = &r.timings;
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{},{:.3},{:.3},{:.3},{:.3},{:.3}",
            r.seed,
            r.outcome.as_str(),
            r.sim_time,
            r.path_length,
            fmt_opt(r.min_h),
            t.gap_ms(),
            t.path_ms(),
            t.zbf_ms(),
            t.nmpc_ms(),
            t.qp_ms(),
        );
    }
    out
}

/// Aggregates outcome rates and timing percentiles across runs.
pub fn summarize(results: &[RunResult]) -> CampaignSummary {
    let n = results.len();
    let count = |o: Outcome| results.iter().filter(|r| r.outcome == o).count() as f64;
    let stage = |extract: fn(&RunResult) -> (f64, usize)| {
        StageStats::from_means(
            results
                .iter()
                .filter_map(|r| {
                    let (total_s, events) = extract(r);
                    (events > 0).then(|| 1e3 * total_s / events as f64)
                })
                .collect(),
        )
    };
    CampaignSummary {
        n_runs: n,
        success_rate: count(Outcome::Success) / n as f64,
        abort_rate: count(Outcome::Abort) / n as f64,
        collision_rate: count(Outcome::Collision) / n as f64,
        mean_sim_time_s: results.iter().map(|r| r.sim_time).sum::<f64>() / n as f64,
        mean_path_length_m: results.iter().map(|r| r.path_length).sum::<f64>() / n as f64,
        gap: stage(|r| (r.timings.gap_s, r.timings.n_cycles)),
        path: stage(|r| (r.timings.path_s, r.timings.n_candidates)),
        zbf: stage(|r| (r.timings.zbf_s, r.timings.n_zbf)),
        nmpc: stage(|r| (r.timings.nmpc_s, r.timings.n_nmpc)),
        qp: stage(|r| (r.timings.qp_s, r.timings.n_qp)),
        cycle: stage(|r| (r.timings.cycle_s, r.timings.n_cycles)),
        hardware_note: "Timings are wall-clock milliseconds on the machine that ran this \
                        campaign and are not comparable across hardware."
            .to_string(),
    }
}

/// Runs `n_runs` seeded episodes (seeds seed_base..seed_base+n_runs-1) on
/// a worker pool. With an output directory set, writes `runs.csv` and
/// `summary.json`, plus `run_<seed>.svg` per episode when `svg` is set.
pub fn run_campaign(
    cfg: &CampaignConfig,
    out_dir: Option<&Path>,
    svg: bool,
) -> Result<CampaignReport, BenchError> {
    if cfg.n_runs < 1 {
        return Err(BenchError::BadConfig("n_runs must be at least 1".into()));
    }
    cfg.episode.robot.validate()?;
    cfg.episode.sensor.validate()?;

    let worlds: Vec<World> = (0..cfg.n_runs)
        .map(|i| generate_world(cfg.kind, cfg.seed_base + i as u64, cfg.density))
        .collect::<Result<_, _>>()?;

    let workers = if cfg.workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        cfg.workers
    }
    .min(cfg.n_runs)
    .max(1);

    let mut slots: Vec<Option<RunResult>> = (0..cfg.n_runs).map(|_| None).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        let next = &next;
        let worlds = &worlds;
        let (tx, rx) = mpsc::channel();
        for _ in 0..workers {
            let tx = tx.clone();
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= worlds.len() {
                    break;
                }
                let seed = cfg.seed_base + i as u64;
                let res = run_episode(&worlds[i], &cfg.episode, seed);
                if tx.send((i, res)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, res) in rx {
            slots[i] = Some(res);
        }
    });
    let results: Vec<RunResult> =
        slots.into_iter().map(|r| r.expect("every episode reports")).collect();

    let csv = csv_report(&results);
    let summary = summarize(&results);
    if let Some(dir) = out_dir.or(cfg.out_dir.as_deref()) {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("runs.csv"), &csv)?;
        let pretty =
            serde_json::to_string_pretty(&summary).expect("summary serializes");
        std::fs::write(dir.join("summary.json"), pretty)?;
        if svg {
            for r in &results {
                let doc = render_trace(&r.trace)?;
                std::fs::write(dir.join(format!("run_{}.svg", r.seed)), doc)?;
            }
        }
    }
    Ok(CampaignReport { summary, results, csv })
}

/// Parses a JSON-Lines trace as written by the episode runner.
pub fn parse_trace_jsonl(text: &str) -> Result<Vec<TraceEvent>, BenchError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| BenchError::MalformedTrace(e.to_string()))
        })
        .collect()
}

/// Zero-crossing segments of the barrier on a square grid (marching
/// squares with linear interpolation; saddle cells disambiguated by the
/// cell-center sign). Every returned endpoint lies within one cell's
/// Lipschitz reach of the true zero set.
pub fn zero_level_segments(
    zbf: &ZbfModel,
    min: Vec2,
    max: Vec2,
    cell: f64,
) -> Vec<(Vec2, Vec2)> {
    let nx = ((max.x - min.x) / cell).ceil() as usize;
    let ny = ((max.y - min.y) / cell).ceil() as usize;
    if nx == 0 || ny == 0 {
        return Vec::new();
    }
    let mut values = vec![0.0; (nx + 1) * (ny + 1)];
    for iy in 0..=ny {
        for ix in 0..=nx {
            let p = Vec2::new(min.x + ix as f64 * cell, min.y + iy as f64 * cell);
            values[iy * (nx + 1) + ix] = zbf.eval(p);
        }
    }
    let mut segments = Vec::new();
    let lerp = |a: Vec2, fa: f64, b: Vec2, fb: f64| -> Vec2 {
        let t = if (fa - fb).abs() < 1e-300 { 0.5 } else { fa / (fa - fb) };
        a + (b - a) * t.clamp(0.0, 1.0)
    };
    for iy in 0..ny {
        for ix in 0..nx {
            let p00 = Vec2::new(min.x + ix as f64 * cell, min.y + iy as f64 * cell);
            let p10 = p00 + Vec2::new(cell, 0.0);
            let p01 = p00 + Vec2::new(0.0, cell);
            let p11 = p00 + Vec2::new(cell, cell);
            let f00 = values[iy * (nx + 1) + ix];
            let f10 = values[iy * (nx + 1) + ix + 1];
            let f01 = values[(iy + 1) * (nx + 1) + ix];
            let f11 = values[(iy + 1) * (nx + 1) + ix + 1];
            let code = ((f00 > 0.0) as u8)
                | (((f10 > 0.0) as u8) << 1)
                | (((f11 > 0.0) as u8) << 2)
                | (((f01 > 0.0) as u8) << 3);
            // Edge crossing points, used by the case table below.
            let bottom = || lerp(p00, f00, p10, f10);
            let right = || lerp(p10, f10, p11, f11);
            let top = || lerp(p01, f01, p11, f11);
            let left = || lerp(p00, f00, p01, f01);
            match code {
                0 | 15 => {}
                1 | 14 => segments.push((left(), bottom())),
                2 | 13 => segments.push((bottom(), right())),
                3 | 12 => segments.push((left(), right())),
                4 | 11 => segments.push((right(), top())),
                6 | 9 => segments.push((bottom(), top())),
                7 | 8 => segments.push((left(), top())),
                5 | 10 => {
                    let center_pos = zbf.eval((p00 + p11) * 0.5) > 0.0;
                    // Connect so the positive region stays on one side of
                    // each segment, using the center sample as the tie
                    // breaker for the two diagonal corners.
                    let same_as_f00 = (code == 5) == center_pos;
                    if same_as_f00 {
                        segments.push((left(), top()));
                        segments.push((bottom(), right()));
                    } else {
                        segments.push((left(), bottom()));
                        segments.push((right(), top()));
                    }
                }
                _ => unreachable!("4-bit case"),
            }
        }
    }
    segments
}

/// Drawing transform from world coordinates to SVG pixels (y flipped).
struct Frame {
    min: Vec2,
    max: Vec2,
    scale: f64,
}

impl Frame {
    fn of(world: &World) -> Self {
        Self { min: world.bounds.min, max: world.bounds.max, scale: 50.0 }
    }

    fn px(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.min.x) * self.scale, (self.max.y - p.y) * self.scale)
    }

    fn size(&self) -> (f64, f64) {
        ((self.max.x - self.min.x) * self.scale, (self.max.y - self.min.y) * self.scale)
    }
}

fn svg_polyline(frame: &Frame, points: impl Iterator<Item = Vec2>, style: &str) -> String {
    let pts: Vec<String> = points
        .map(|p| {
            let (x, y) = frame.px(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    if pts.len() < 2 {
        return String::new();
    }
    format!("<polyline fill=\"none\" {} points=\"{}\"/>\n", style, pts.join(" "))
}

fn svg_circle(frame: &Frame, center: Vec2, radius: f64, style: &str) -> String {
    let (cx, cy) = frame.px(center);
    format!(
        "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\" {style}/>\n",
        radius * frame.scale
    )
}

fn svg_polygon(frame: &Frame, vertices: &[Vec2], style: &str) -> String {
    let pts: Vec<String> = vertices
        .iter()
        .map(|&p| {
            let (x, y) = frame.px(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    format!("<polygon {} points=\"{}\"/>\n", style, pts.join(" "))
}

fn svg_world(doc: &mut String, frame: &Frame, world: &World) {
    let (w, h) = frame.size();
    let _ = write!(
        doc,
        "<rect x=\"0\" y=\"0\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"#ffffff\" \
         stroke=\"#222222\" stroke-width=\"2\"/>\n"
    );
    for obs in &world.obstacles {
        match obs {
            crate::sim::Obstacle::Disc(d) => {
                doc.push_str(&svg_circle(frame, d.center, d.radius, "fill=\"#9aa0a6\""));
            }
            crate::sim::Obstacle::Polygon(p) => {
                doc.push_str(&svg_polygon(frame, p.vertices(), "fill=\"#9aa0a6\""));
            }
        }
    }
    doc.push_str(&svg_circle(frame, world.start.position(), 0.12, "fill=\"#1e8e3e\""));
    doc.push_str(&svg_circle(frame, world.goal, 0.12, "fill=\"#d93025\""));
}

fn svg_region(doc: &mut String, frame: &Frame, region: &PlanRegion) {
    let style = "stroke=\"#1a73e8\" stroke-width=\"1.5\" fill=\"none\"";
    match region {
        PlanRegion::Keyhole(k) => {
            doc.push_str(&svg_circle(frame, k.circle.center, k.circle.radius, style));
            doc.push_str(&svg_polygon(
                frame,
                k.polygon.vertices(),
                &format!("{style} stroke-dasharray=\"4 3\""),
            ));
        }
        PlanRegion::Disc(d) => {
            doc.push_str(&svg_circle(frame, d.center, d.radius, style));
        }
    }
}

fn region_bbox(region: &PlanRegion) -> (Vec2, Vec2) {
    let (c, r) = match region {
        PlanRegion::Keyhole(k) => (k.circle.center, k.circle.radius),
        PlanRegion::Disc(d) => (d.center, d.radius),
    };
    let mut min = c - Vec2::new(r, r);
    let mut max = c + Vec2::new(r, r);
    if let PlanRegion::Keyhole(k) = region {
        for v in k.polygon.vertices() {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
    }
    let pad = Vec2::new(0.2, 0.2);
    (min - pad, max + pad)
}

/// Cell size of the rendered zero level-set grid, meters.
pub const LEVEL_SET_CELL: f64 = 0.05;

fn svg_level_set(doc: &mut String, frame: &Frame, zbf: &ZbfModel, region: &PlanRegion) {
    let (min, max) = region_bbox(region);
    for (a, b) in zero_level_segments(zbf, min, max, LEVEL_SET_CELL) {
        let (x1, y1) = frame.px(a);
        let (x2, y2) = frame.px(b);
        let _ = write!(
            doc,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" \
             stroke=\"#d93025\" stroke-width=\"1\"/>\n"
        );
    }
}

/// Renders a trace to a standalone SVG document: the world with start and
/// goal, the driven path, and the last committed plan's region boundary
/// and barrier zero level-set.
pub fn render_trace(trace: &[TraceEvent]) -> Result<String, BenchError> {
    let world = trace
        .iter()
        .find_map(|e| match e {
            TraceEvent::World { world } => Some(world),
            _ => None,
        })
        .ok_or_else(|| BenchError::MalformedTrace("no world event".into()))?;
    let frame = Frame::of(world);
    let (w, h) = frame.size();
    let mut doc = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w:.2} {h:.2}\" \
         width=\"{w:.0}\" height=\"{h:.0}\">\n"
    );
    svg_world(&mut doc, &frame, world);
    if let Some((region, zbf)) = trace.iter().rev().find_map(|e| match e {
        TraceEvent::Plan { region, zbf, .. } => Some((region, zbf)),
        _ => None,
    }) {
        svg_region(&mut doc, &frame, region);
        svg_level_set(&mut doc, &frame, zbf, region);
    }
    let path_points = trace.iter().filter_map(|e| match e {
        TraceEvent::Step { x, y, .. } => Some(Vec2::new(*x, *y)),
        _ => None,
    });
    doc.push_str(&svg_polyline(
        &frame,
        path_points,
        "stroke=\"#188038\" stroke-width=\"2\"",
    ));
    doc.push_str("</svg>\n");
    Ok(doc)
}

/// Trains a barrier for the scene visible from a pose and renders scan,
/// region, and zero level-set — a one-shot demonstration figure.
pub fn zbf_demo_svg(
    world: &World,
    pose: &Pose2,
    sensor: &SensorConfig,
    margin_frac: f64,
    robot_radius: f64,
) -> Result<String, BenchError> {
    use crate::gaps::{
        construct_keyhole, detect_gaps, inflate_keyhole, polygon_clear_of_returns,
        GapDetectionParams,
    };
    use crate::geometry::largest_centered_disc;

    sensor.validate()?;
    let scan = raycast_scan(world, pose, sensor);
    let params = GapDetectionParams::for_robot(robot_radius, scan.angle_increment);
    let pos = pose.position();
    let mut trained: Option<(PlanRegion, ZbfModel)> = None;
    for gap in detect_gaps(&scan, &params) {
        let Ok(k) = construct_keyhole(&gap, &scan, robot_radius) else { continue };
        let margin = margin_frac * k.circle.radius;
        let Ok(ik) = inflate_keyhole(&k, robot_radius, margin) else { continue };
        if !polygon_clear_of_returns(&ik.polygon, &scan, robot_radius) {
            continue;
        }
        if let Ok(model) = synthesize_zbf(&ik) {
            trained = Some((PlanRegion::Keyhole(ik.translated(pos)), model.translated(pos)));
            break;
        }
    }
    if trained.is_none() {
        let raw = largest_centered_disc(&scan);
        let r = raw.radius - (robot_radius + margin_frac * raw.radius);
        if r > 0.05 {
            let disc = crate::geometry::Disc { center: Vec2::zeros(), radius: r };
            if let Ok(model) = synthesize_disc_zbf(&disc) {
                trained = Some((
                    PlanRegion::Disc(crate::geometry::Disc { center: pos, radius: r }),
                    model.translated(pos),
                ));
            }
        }
    }
    let (region, model) = trained.ok_or_else(|| {
        BenchError::BadConfig("no barrier is trainable from this pose".into())
    })?;

    let frame = Frame::of(world);
    let (w, h) = frame.size();
    let mut doc = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w:.2} {h:.2}\" \
         width=\"{w:.0}\" height=\"{h:.0}\">\n"
    );
    svg_world(&mut doc, &frame, world);
    // Scan returns as dots.
    for i in 0..scan.n_beams() {
        if !scan.is_max_range(i) {
            doc.push_str(&svg_circle(&frame, pos + scan.beam_point(i), 0.03, "fill=\"#f29900\""));
        }
    }
    svg_region(&mut doc, &frame, &region);
    svg_level_set(&mut doc, &frame, &model, &region);
    doc.push_str(&svg_circle(&frame, pos, robot_radius, "fill=\"#1a73e8\""));
    doc.push_str("</svg>\n");
    Ok(doc)
}

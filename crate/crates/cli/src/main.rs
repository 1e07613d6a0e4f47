//! `gapnav` — benchmark and rendering CLI for the gap-based navigation
//! stack.
//!
//! Subcommands:
//! * `run`      — seeded Monte-Carlo campaign; writes runs.csv + summary.json.
//! * `episode`  — one seeded episode; emits its JSON-Lines trace.
//! * `render`   — trace file → SVG (world, path, region, zero level-set).
//! * `zbf-demo` — train a barrier from a world's start pose and render it.
//!
//! Exit codes: 0 success, 1 configuration error (including bad arguments),
//! 2 I/O error.

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use gapnav_core::bench::{
    parse_trace_jsonl, render_trace, run_campaign, zbf_demo_svg, BenchError, CampaignConfig,
};
use gapnav_core::sim::{generate_world, run_episode};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gapnav", version, about = "Gap-based navigation benchmark harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a Monte-Carlo campaign over seeds seed_base..seed_base+n_runs-1.
    Run {
        /// Campaign config JSON; defaults fill any missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for runs.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write run_<seed>.svg per episode (requires an output dir).
        #[arg(long)]
        svg: bool,
    },
    /// Run a single seeded episode and emit its JSON-Lines trace.
    Episode {
        /// Campaign config JSON; its scenario and episode settings apply.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Episode seed (also selects the generated world).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace output path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG rendering alongside the trace (needs --out).
        #[arg(long)]
        svg: bool,
    },
    /// Render a JSON-Lines trace file to SVG.
    Render {
        /// Trace file as written by `episode`.
        trace: PathBuf,
        /// SVG output path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a barrier for the scene visible from the world's start pose.
    ZbfDemo {
        /// Campaign config JSON selecting scenario, sensor, and robot.
        #[arg(long)]
        config: Option<PathBuf>,
        /// World generation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// SVG output path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> anyhow::Result<CampaignConfig> {
    let Some(path) = path else {
        return Ok(CampaignConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg: CampaignConfig = serde_json::from_str(&text)
        .map_err(|e| BenchError::BadConfig(e.to_string()))
        .with_context(|| format!("parsing config {}", path.display()))?;
    Ok(cfg)
}

fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn dispatch(cmd: Cmd) -> anyhow::Result<()> {
    match cmd {
        Cmd::Run { config, seed, out, svg } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.seed_base = seed;
            }
            let report = run_campaign(&cfg, out.as_deref(), svg)?;
            let pretty = serde_json::to_string_pretty(&report.summary)
                .expect("summary serializes");
            println!("{pretty}");
        }
        Cmd::Episode { config, seed, out, svg } => {
            let cfg = load_config(config.as_deref())?;
            let world = generate_world(cfg.kind, seed, cfg.density)
                .map_err(BenchError::WorldGen)?;
            let result = run_episode(&world, &cfg.episode, seed);
            write_or_print(out.as_deref(), &result.trace_jsonl())?;
            if let Some(path) = &out {
                eprintln!(
                    "seed {} -> {} after {:.2}s ({:.2}m)",
                    seed,
                    result.outcome.as_str(),
                    result.sim_time,
                    result.path_length
                );
                if svg {
                    let doc = render_trace(&result.trace)?;
                    let svg_path = path.with_extension("svg");
                    std::fs::write(&svg_path, doc)
                        .with_context(|| format!("writing {}", svg_path.display()))?;
                }
            }
        }
        Cmd::Render { trace, out } => {
            let text = std::fs::read_to_string(&trace)
                .with_context(|| format!("reading trace {}", trace.display()))?;
            let events = parse_trace_jsonl(&text)?;
            write_or_print(out.as_deref(), &render_trace(&events)?)?;
        }
        Cmd::ZbfDemo { config, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let world = generate_world(cfg.kind, seed, cfg.density)
                .map_err(BenchError::WorldGen)?;
            let doc = zbf_demo_svg(
                &world,
                &world.start,
                &cfg.episode.sensor,
                cfg.episode.planner.margin_frac,
                cfg.episode.robot.radius,
            )?;
            write_or_print(out.as_deref(), &doc)?;
        }
    }
    Ok(())
}

/// 1 for configuration problems, 2 when a filesystem operation failed.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(bench) = cause.downcast_ref::<BenchError>() {
            return match bench {
                BenchError::Io(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

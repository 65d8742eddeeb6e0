//! Command-line front end: plan a configured task, audit the plan, or sweep
//! a resolution parameter and report planner effort.
//!
//! Exit codes: 0 on success, 2 when the task is infeasible (no admissible
//! pose or no connecting trajectory), 1 for any other error.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use moboplan_core::pipeline::{
    benchmark_csv, prepare, run_planner, run_sweep, solve_arm_for_plan, write_outputs, BenchRow,
    Pipeline, PipelineError, PlanOutcome, PlannerKind, SweepParam,
};
use moboplan_core::planner::PlanError;
use moboplan_core::postprocess::validate_plan;
use moboplan_core::world::WorldError;
use moboplan_core::PlanConfig;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "moboplan",
    version,
    about = "Base trajectory planner for a mobile printing robot"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan the configured task and optionally write result files.
    Plan(PlanArgs),
    /// Plan, then audit the plan against its own admissible sets.
    Validate(PlanArgs),
    /// Re-plan across a list of parameter values and report planner effort.
    Benchmark(BenchArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Planner: mobocontp, dijkstra, or brute.
    #[arg(long, default_value = "mobocontp")]
    planner: String,
    /// Directory for result files (CSV, and SVG with --svg).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dense trajectory sample rate, Hz; must give a whole number of
    /// sub-steps per stage.
    #[arg(long, default_value_t = 10.0)]
    rate: f64,
    /// Also write SVG views of the plan.
    #[arg(long)]
    svg: bool,
    /// Worker threads for the planner (0 = library default).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Override the configured stage duration, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the configured velocity resolution, m/s.
    #[arg(long)]
    dv: Option<f64>,
    /// Override the configured yaw-rate resolution, rad/s.
    #[arg(long)]
    domega: Option<f64>,
    /// Override the configured speed limit, m/s.
    #[arg(long)]
    vmax: Option<f64>,
    /// Override the configured yaw-rate limit, rad/s.
    #[arg(long)]
    omegamax: Option<f64>,
    /// Override the configured layer count.
    #[arg(long)]
    layers: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Parameter to vary: dv, dt, or layers.
    #[arg(long)]
    sweep: String,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Also run the Dijkstra baseline at every point.
    #[arg(long)]
    compare: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Plan(args) => cmd_plan(args, false),
        Cmd::Validate(args) => cmd_plan(args, true),
        Cmd::Benchmark(args) => cmd_benchmark(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Infeasibility is an expected outcome, not a malfunction; it gets its own
/// exit code so scripts can tell the two apart.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        let infeasible = match cause.downcast_ref::<PipelineError>() {
            Some(PipelineError::Plan(PlanError::Infeasible { .. })) => true,
            Some(PipelineError::World(WorldError::EmptyStage { .. })) => true,
            _ => matches!(
                cause.downcast_ref::<PlanError>(),
                Some(PlanError::Infeasible { .. })
            ) || matches!(
                cause.downcast_ref::<WorldError>(),
                Some(WorldError::EmptyStage { .. })
            ),
        };
        if infeasible {
            return 2;
        }
    }
    1
}

fn load_config(path: &Path) -> Result<(PlanConfig, PathBuf)> {
    let config = PlanConfig::load(path)?;
    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, base_dir))
}

fn apply_overrides(config: &mut PlanConfig, args: &PlanArgs) {
    if let Some(v) = args.dt {
        config.dt = v;
    }
    if let Some(v) = args.dv {
        config.dv = v;
    }
    if let Some(v) = args.domega {
        config.domega = v;
    }
    if let Some(v) = args.vmax {
        config.v_max = v;
    }
    if let Some(v) = args.omegamax {
        config.omega_max = v;
    }
    if let Some(v) = args.layers {
        config.layers = v;
    }
}

fn plan_once(args: &PlanArgs) -> Result<(Pipeline, PlanOutcome, PlannerKind)> {
    let kind: PlannerKind = args.planner.parse().map_err(anyhow::Error::msg)?;
    let (mut config, base_dir) = load_config(&args.config)?;
    apply_overrides(&mut config, args);
    let pipe = prepare(config, &base_dir).context("building the planning problem")?;
    let outcome = run_planner(&pipe.aspace, kind, args.workers).context("planning")?;
    Ok((pipe, outcome, kind))
}

fn cmd_plan(args: PlanArgs, validate: bool) -> Result<()> {
    let (pipe, outcome, kind) = plan_once(&args)?;
    let plan = &outcome.plan;
    println!("task length: {:.4} m", moboplan_core::tasks::path_length(&pipe.path));
    println!("stages: {}", pipe.aspace.n_stages());
    println!("admissible poses: {}", pipe.aspace.total_keys());
    println!("planner: {}", kind.name());
    println!("cost: {}", plan.cost);
    println!("relaxations: {}", plan.relaxations);
    println!("wall: {:.3} s", outcome.wall_s);

    let arm_traj = solve_arm_for_plan(&pipe, plan).context("solving arm joints")?;
    println!("arm jump flags: {}", arm_traj.report.flags.len());

    if validate {
        let report = validate_plan(plan, &pipe.aspace);
        println!("validation: {}", report.summary());
        if !report.is_clean() {
            bail!("plan failed its own audit: {}", report.summary());
        }
    }
    if let Some(dir) = &args.out {
        let written = write_outputs(&pipe, plan, &arm_traj, args.rate, dir, args.svg)?;
        for f in written {
            println!("wrote: {}", f.display());
        }
    }
    Ok(())
}

fn cmd_benchmark(args: BenchArgs) -> Result<()> {
    let (config, base_dir) = load_config(&args.config)?;
    let mut rows: Vec<BenchRow> = Vec::new();
    match args.sweep.as_str() {
        "dv" | "dt" => {
            let param = if args.sweep == "dv" {
                SweepParam::Dv
            } else {
                SweepParam::Dt
            };
            let points = run_sweep(&config, &base_dir, param, &args.values)?;
            for p in &points {
                rows.push(BenchRow {
                    param: param.name(),
                    value: p.value,
                    planner: PlannerKind::Mobocontp.name(),
                    stages: p.stages,
                    relaxations: p.relaxations,
                    cost: p.cost,
                    wall_s: p.wall_s,
                    feasible: true,
                });
            }
            if args.compare {
                for &value in &args.values {
                    let mut cfg = config.clone();
                    match param {
                        SweepParam::Dv => cfg.dv = value,
                        SweepParam::Dt => cfg.dt = value,
                    }
                    cfg.domega = moboplan_core::snap_domega(cfg.domega, cfg.dt);
                    let pipe = prepare(cfg, &base_dir)?;
                    let out = run_planner(&pipe.aspace, PlannerKind::Dijkstra, 0)?;
                    rows.push(BenchRow {
                        param: param.name(),
                        value,
                        planner: PlannerKind::Dijkstra.name(),
                        stages: pipe.aspace.n_stages(),
                        relaxations: out.plan.relaxations,
                        cost: out.plan.cost,
                        wall_s: out.wall_s,
                        feasible: true,
                    });
                }
            }
        }
        "layers" => {
            for &value in &args.values {
                if value.fract() != 0.0 || value < 1.0 {
                    bail!("layer counts must be whole numbers >= 1 (got {value})");
                }
                let mut cfg = config.clone();
                cfg.layers = value as usize;
                let pipe = prepare(cfg, &base_dir)?;
                let kinds: &[PlannerKind] = if args.compare {
                    &[PlannerKind::Mobocontp, PlannerKind::Dijkstra]
                } else {
                    &[PlannerKind::Mobocontp]
                };
                for &kind in kinds {
                    let out = run_planner(&pipe.aspace, kind, 0)?;
                    rows.push(BenchRow {
                        param: "layers",
                        value,
                        planner: kind.name(),
                        stages: pipe.aspace.n_stages(),
                        relaxations: out.plan.relaxations,
                        cost: out.plan.cost,
                        wall_s: out.wall_s,
                        feasible: true,
                    });
                }
            }
        }
        other => bail!("unknown sweep parameter {other:?} (expected dv, dt, or layers)"),
    }
    let csv = benchmark_csv(&rows);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &csv)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("wrote: {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

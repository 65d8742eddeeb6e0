//! End-to-end assembly: configuration to plan to reports.
//!
//! `prepare` turns a [`PlanConfig`] into everything the planners need; the
//! run helpers execute a planner (optionally on a fixed-size thread pool),
//! sweep a resolution parameter, and serialize results. All serializers are
//! deterministic: the same plan always produces the same bytes.

use crate::arm::{solve_arm_trajectory, ArmError, ArmTrajectory, DEFAULT_JUMP_THRESHOLD};
use crate::config::{ConfigError, PlanConfig};
use crate::grid::{Event, GridError, GridSpec};
use crate::planner::{
    brute_force_plan, dijkstra_baseline, mobocontp, PlanError, PlanResult,
};
use crate::postprocess::{interpolate, DenseTrajectory, PostError};
use crate::reach::{ReachError, ReachSet};
use crate::render::{render_plan_view, render_profiles, RenderOptions};
use crate::world::{
    build_admissible_spacetime, sample_ee_trajectory, AdmissibleSpacetime, EETrajectory,
    WorldError, WorldModel,
};
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Arm(#[from] ArmError),
    #[error(transparent)]
    Post(#[from] PostError),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Everything derived from one configuration, ready to plan on.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PlanConfig,
    /// The 3D print path the nozzle follows.
    pub path: Vec<[f64; 3]>,
    /// The path sampled at one nozzle step per stage.
    pub ee: EETrajectory,
    pub spec: GridSpec,
    pub world: WorldModel,
    pub reach: ReachSet,
    pub aspace: AdmissibleSpacetime,
}

/// Builds the full planning problem for a configuration. `base_dir` anchors
/// relative path-file references.
pub fn prepare(config: PlanConfig, base_dir: &Path) -> Result<Pipeline, PipelineError> {
    config.validate()?;
    let path = config.build_path(base_dir)?;
    let ee = sample_ee_trajectory(&path, config.v_n, config.dt)?;
    let spec = GridSpec::new(config.grid_params().with_stages(ee.n_stages()))?;
    let mut world = WorldModel::new(config.r_b, config.m_c)?;
    for ob in &config.obstacles {
        world.add_obstacle(*ob);
    }
    world.add_print_trajectory(&ee);
    let reach = ReachSet::build(&config.arm, config.delta, config.x_min, &ee.heights())?;
    let aspace = build_admissible_spacetime(&spec, &world, &reach, &ee)?;
    Ok(Pipeline {
        config,
        path,
        ee,
        spec,
        world,
        reach,
        aspace,
    })
}

/// Which planner to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerKind {
    Mobocontp,
    Dijkstra,
    Brute,
}

impl PlannerKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlannerKind::Mobocontp => "mobocontp",
            PlannerKind::Dijkstra => "dijkstra",
            PlannerKind::Brute => "brute",
        }
    }

    pub fn plan(&self, aspace: &AdmissibleSpacetime) -> Result<PlanResult, PlanError> {
        match self {
            PlannerKind::Mobocontp => mobocontp(aspace),
            PlannerKind::Dijkstra => dijkstra_baseline(aspace),
            PlannerKind::Brute => brute_force_plan(aspace),
        }
    }
}

impl FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mobocontp" => Ok(PlannerKind::Mobocontp),
            "dijkstra" => Ok(PlannerKind::Dijkstra),
            "brute" => Ok(PlannerKind::Brute),
            other => Err(format!(
                "unknown planner {other:?} (expected mobocontp, dijkstra, or brute)"
            )),
        }
    }
}

/// A plan plus how long the whole planner call took.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub plan: PlanResult,
    pub wall_s: f64,
}

/// Runs a planner; `workers > 0` pins a dedicated thread pool of that size,
/// `workers == 0` uses the default pool. The plan itself is identical either
/// way; only the wall time changes.
pub fn run_planner(
    aspace: &AdmissibleSpacetime,
    kind: PlannerKind,
    workers: usize,
) -> Result<PlanOutcome, PipelineError> {
    let t0 = Instant::now();
    let plan = if workers == 0 {
        kind.plan(aspace)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()?;
        pool.install(|| kind.plan(aspace))?
    };
    Ok(PlanOutcome {
        plan,
        wall_s: t0.elapsed().as_secs_f64(),
    })
}

/// Solves the arm joints along a planned base trajectory against the
/// pipeline's nozzle samples.
pub fn solve_arm_for_plan(pipe: &Pipeline, plan: &PlanResult) -> Result<ArmTrajectory, ArmError> {
    let bases: Vec<(f64, f64, f64)> = plan.events.iter().map(|e| (e.x, e.y, e.phi)).collect();
    let targets: Vec<[f64; 3]> = pipe.ee.samples().iter().map(|s| s.pos).collect();
    solve_arm_trajectory(
        &pipe.config.arm,
        &bases,
        &targets,
        pipe.config.dt,
        DEFAULT_JUMP_THRESHOLD,
    )
}

/// Adjusts the yaw-rate resolution so a whole number of yaw bins closes the
/// circle at stage duration `dt`, keeping it as close to the request as the
/// closure constraint allows.
pub fn snap_domega(domega: f64, dt: f64) -> f64 {
    let n = (TAU / (domega * dt)).round().max(1.0);
    TAU / (n * dt)
}

/// Which resolution a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Planar velocity resolution `dv`.
    Dv,
    /// Stage duration `dt`.
    Dt,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Dv => "dv",
            SweepParam::Dt => "dt",
        }
    }
}

/// One sweep measurement.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub value: f64,
    pub stages: usize,
    pub total_keys: usize,
    pub relaxations: u64,
    pub cost: f64,
    pub wall_s: f64,
}

/// Re-prepares and re-plans the configured task once per parameter value.
/// When `dt` varies, the yaw resolution is re-snapped per point so every
/// grid still closes the yaw circle.
pub fn run_sweep(
    config: &PlanConfig,
    base_dir: &Path,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepPoint>, PipelineError> {
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = config.clone();
        match param {
            SweepParam::Dv => cfg.dv = value,
            SweepParam::Dt => cfg.dt = value,
        }
        cfg.domega = snap_domega(cfg.domega, cfg.dt);
        let pipe = prepare(cfg, base_dir)?;
        let out = run_planner(&pipe.aspace, PlannerKind::Mobocontp, 0)?;
        points.push(SweepPoint {
            value,
            stages: pipe.aspace.n_stages(),
            total_keys: pipe.aspace.total_keys(),
            relaxations: out.plan.relaxations,
            cost: out.plan.cost,
            wall_s: out.wall_s,
        });
    }
    Ok(points)
}

/// `t,x,y,phi` rows at the dense sample rate. Floats print in the shortest
/// form that parses back exactly, so equal plans give equal bytes.
pub fn trajectory_csv(dense: &DenseTrajectory) -> String {
    let mut out = String::from("t,x,y,phi\n");
    for s in &dense.samples {
        let _ = writeln!(out, "{},{},{},{}", s.t, s.x, s.y, s.phi);
    }
    out
}

/// `stage,t,jx,jy,jphi,x,y,phi` rows, one per planned event.
pub fn events_csv(events: &[Event]) -> String {
    let mut out = String::from("stage,t,jx,jy,jphi,x,y,phi\n");
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            e.stage, e.t, e.key.jx, e.key.jy, e.key.jphi, e.x, e.y, e.phi
        );
    }
    out
}

/// `t,yaw,shoulder,elbow,wrist,tilt` rows at stage resolution.
pub fn joints_csv(traj: &ArmTrajectory, dt: f64) -> String {
    let mut out = String::from("t,yaw,shoulder,elbow,wrist,tilt\n");
    for (i, s) in traj.solutions.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            i as f64 * dt,
            s.yaw,
            s.shoulder,
            s.elbow,
            s.wrist,
            s.axis_tilt
        );
    }
    out
}

/// One planner measurement for the benchmark report.
#[derive(Debug, Clone)]
pub struct BenchRow {
    /// Swept parameter name (e.g. `dv`, `dt`, `layers`).
    pub param: &'static str,
    pub value: f64,
    pub planner: &'static str,
    pub stages: usize,
    pub relaxations: u64,
    pub cost: f64,
    pub wall_s: f64,
    pub feasible: bool,
}

/// `param,value,planner,stages,relaxations,cost,wall_s,feasible` rows.
/// Wall times vary run to run; everything else is deterministic.
pub fn benchmark_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("param,value,planner,stages,relaxations,cost,wall_s,feasible\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.param, r.value, r.planner, r.stages, r.relaxations, r.cost, r.wall_s, r.feasible
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    std::fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the standard artifact set for a solved plan into `dir` and returns
/// the files written: dense trajectory and event CSVs, the joint CSV, and
/// (optionally) the two SVG views.
pub fn write_outputs(
    pipe: &Pipeline,
    plan: &PlanResult,
    arm_traj: &ArmTrajectory,
    rate: f64,
    dir: &Path,
    svg: bool,
) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let dense = interpolate(&plan.events, &pipe.spec, rate)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, contents: String| -> Result<(), PipelineError> {
        let p = dir.join(name);
        write_file(&p, &contents)?;
        written.push(p);
        Ok(())
    };
    emit("trajectory.csv", trajectory_csv(&dense))?;
    emit("events.csv", events_csv(&plan.events))?;
    emit("joints.csv", joints_csv(arm_traj, pipe.config.dt))?;
    if svg {
        let opts = RenderOptions::default();
        emit(
            "plan_view.svg",
            render_plan_view(&pipe.path, &plan.events, pipe.world.obstacles(), &opts),
        )?;
        emit(
            "profiles.svg",
            render_profiles(&plan.events, &pipe.spec, &opts),
        )?;
    }
    Ok(written)
}

//! Planning stack for a printing robot whose mobile base carries a nozzle
//! arm: the nozzle must traverse a print path at constant speed while the
//! base repositions itself underneath.
//!
//! The pieces, in dependency order:
//!
//! - [`grid`]: the base's spacetime grid — integer pose keys, the velocity
//!   cone, and the step cost. All coordinates derive from indices so floats
//!   never drift.
//! - [`tasks`]: print-path generators and the plain-text path format.
//! - [`arm`]: closed-form inverse kinematics for the yaw–shoulder–elbow arm
//!   with an implied tool-pitch wrist.
//! - [`reach`]: a voxelized reach cloud condensed into per-height annular
//!   regions the planner can query in constant time.
//! - [`world`]: nozzle-path sampling, obstacles, the growing printed part,
//!   and the per-stage admissible pose sets built from all of the above.
//! - [`planner`]: backward value iteration over the admissible sets, plus a
//!   Dijkstra baseline and an exhaustive reference search.
//! - [`postprocess`]: densification, plan auditing, and summary metrics.
//! - [`fit`], [`render`]: least-squares helpers and SVG output.
//! - [`config`], [`pipeline`]: JSON run configuration and the end-to-end
//!   assembly, with deterministic serializers.
//!
//! Determinism is a design rule throughout: every tie in every search breaks
//! lexicographically, parallel reductions preserve order, and serializers
//! format floats reproducibly, so a given input always yields byte-identical
//! outputs regardless of thread count.

pub mod arm;
pub mod config;
pub mod fit;
pub mod grid;
pub mod pipeline;
pub mod planner;
pub mod postprocess;
pub mod reach;
pub mod render;
pub mod tasks;
pub mod world;

pub use arm::{solve_arm_ik, solve_arm_trajectory, ArmError, ArmModel, ArmTrajectory, IkSolution};
pub use config::{ConfigError, PlanConfig, TaskConfig};
pub use grid::{Control, Event, GridError, GridKey, GridParams, GridSpec};
pub use pipeline::{
    prepare, run_planner, run_sweep, snap_domega, Pipeline, PipelineError, PlannerKind,
    SweepParam,
};
pub use planner::{
    brute_force_plan, dijkstra_baseline, mobocontp, PlanError, PlanResult, BRUTE_FORCE_CAP,
};
pub use postprocess::{interpolate, trajectory_metrics, validate_plan, ValidationReport};
pub use reach::{ReachError, ReachSet, ReachableRegion, VoxelCloud};
pub use world::{
    build_admissible_spacetime, sample_ee_trajectory, AdmissibleSpacetime, EETrajectory,
    Obstacle, StageSet, WorldError, WorldModel,
};

//! JSON run configuration: task selection, grid resolution, robot and
//! workspace parameters.
//!
//! Unknown fields are rejected so a typo in a config file fails loudly
//! instead of silently falling back to a default.

use crate::arm::ArmModel;
use crate::grid::GridParams;
use crate::tasks::{self, TaskError};
use crate::world::Obstacle;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{what} must be positive (got {value})")]
    NonPositive { what: &'static str, value: f64 },
    #[error(transparent)]
    Task(#[from] TaskError),
}

/// What to print. Layered tasks stack their outline `layers` times.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    /// A straight seam of the given length.
    Line { length: f64 },
    /// A closed square outline.
    Square { side: f64 },
    /// Open-top double-wall rectangle.
    UShape {
        #[serde(default = "default_u_width")]
        width: f64,
        #[serde(default = "default_u_height")]
        height: f64,
        #[serde(default = "default_u_wall")]
        wall: f64,
    },
    /// Bundled rectilinear benchmark outline (11.29 m per layer).
    Ntu,
    /// Load vertices from a path file (relative paths resolve against the
    /// config file's directory).
    PathFile { file: String },
}

fn default_u_width() -> f64 {
    1.285
}
fn default_u_height() -> f64 {
    0.5
}
fn default_u_wall() -> f64 {
    0.3
}

fn default_weight() -> f64 {
    0.1
}
fn default_layers() -> usize {
    1
}
fn default_layer_height() -> f64 {
    0.05
}
fn default_delta() -> f64 {
    0.05
}
fn default_x_min() -> f64 {
    0.3
}
fn default_r_b() -> f64 {
    0.4
}
fn default_m_c() -> f64 {
    0.05
}

/// Complete description of one planning run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub task: TaskConfig,
    /// Stage duration, s.
    pub dt: f64,
    /// Planar velocity resolution, m/s (used for both axes).
    pub dv: f64,
    /// Yaw rate resolution, rad/s.
    pub domega: f64,
    /// Base speed limit, m/s.
    pub v_max: f64,
    /// Base yaw rate limit, rad/s.
    pub omega_max: f64,
    /// Nozzle travel speed along the print path, m/s.
    pub v_n: f64,
    /// Yaw weight in the step cost.
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_layer_height")]
    pub layer_height: f64,
    /// Reachability voxel edge, m.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Forward clearance between base centre and nozzle, m.
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    /// Base body radius, m.
    #[serde(default = "default_r_b")]
    pub r_b: f64,
    /// Extra clearance margin around printed material, m.
    #[serde(default = "default_m_c")]
    pub m_c: f64,
    #[serde(default)]
    pub arm: ArmModel,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
}

impl PlanConfig {
    pub fn from_json(text: &str) -> Result<PlanConfig, ConfigError> {
        let cfg: PlanConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PlanConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positives = [
            ("dt", self.dt),
            ("dv", self.dv),
            ("domega", self.domega),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
            ("v_n", self.v_n),
            ("layer_height", self.layer_height),
            ("delta", self.delta),
            ("x_min", self.x_min),
            ("r_b", self.r_b),
        ];
        for (what, value) in positives {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::NonPositive { what, value });
            }
        }
        for (what, value) in [("weight", self.weight), ("m_c", self.m_c)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ConfigError::NonPositive { what, value });
            }
        }
        Ok(())
    }

    /// Grid parameters for this config; the stage count is set later, once
    /// the print path has been sampled.
    pub fn grid_params(&self) -> GridParams {
        GridParams::uniform(self.dt, self.dv, self.domega, self.v_max, self.omega_max)
            .with_weight(self.weight)
    }

    /// Builds the 3D print path for the configured task. `base_dir` anchors
    /// relative `path_file` references.
    pub fn build_path(&self, base_dir: &Path) -> Result<Vec<[f64; 3]>, ConfigError> {
        let path = match &self.task {
            TaskConfig::Line { length } => {
                // A line is an open seam: repeat it per layer like an outline.
                let mut out = Vec::new();
                for k in 0..self.layers.max(1) {
                    let z = (k + 1) as f64 * self.layer_height;
                    let seg = tasks::gen_line(*length, z)?;
                    if k % 2 == 0 {
                        out.extend(seg);
                    } else {
                        // Alternate direction so layers chain end-to-end.
                        out.extend(seg.into_iter().rev());
                    }
                }
                out
            }
            TaskConfig::Square { side } => {
                tasks::gen_layers(&tasks::gen_square(*side)?, self.layers, self.layer_height)?
            }
            TaskConfig::UShape {
                width,
                height,
                wall,
            } => tasks::gen_layers(
                &tasks::gen_u_outline(*width, *height, *wall)?,
                self.layers,
                self.layer_height,
            )?,
            TaskConfig::Ntu => tasks::gen_layers(
                &tasks::gen_ntu_standin(),
                self.layers,
                self.layer_height,
            )?,
            TaskConfig::PathFile { file } => {
                let p = Path::new(file);
                let resolved = if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    base_dir.join(p)
                };
                tasks::load_path_file(&resolved)?
            }
        };
        Ok(path)
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::path_length;

    fn minimal(task_json: &str) -> String {
        format!(
            r#"{{
  "task": {task_json},
  "dt": 3.0, "dv": 0.05, "domega": 0.10471975511965977,
  "v_max": 0.15, "omega_max": 0.3141592653589793, "v_n": 0.1
}}"#
        )
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = PlanConfig::from_json(&minimal(r#"{"kind": "line", "length": 2.0}"#)).unwrap();
        assert_eq!(cfg.weight, 0.1);
        assert_eq!(cfg.layers, 1);
        assert_eq!(cfg.layer_height, 0.05);
        assert_eq!(cfg.delta, 0.05);
        assert_eq!(cfg.x_min, 0.3);
        assert_eq!(cfg.r_b, 0.4);
        assert_eq!(cfg.m_c, 0.05);
        assert!(cfg.obstacles.is_empty());
        assert_eq!(cfg.arm, ArmModel::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = minimal(r#"{"kind": "line", "length": 2.0}"#)
            .replace("\"dt\": 3.0", "\"dt\": 3.0, \"dtt\": 9.0");
        assert!(matches!(
            PlanConfig::from_json(&text),
            Err(ConfigError::Json(_))
        ));
        assert!(PlanConfig::from_json(&minimal(r#"{"kind": "circle"}"#)).is_err());
    }

    #[test]
    fn bad_numbers_are_rejected() {
        let text = minimal(r#"{"kind": "line", "length": 2.0}"#).replace("3.0,", "-3.0,");
        match PlanConfig::from_json(&text) {
            Err(ConfigError::NonPositive { what, value }) => {
                assert_eq!(what, "dt");
                assert_eq!(value, -3.0);
            }
            other => panic!("expected NonPositive, got {other:?}"),
        }
    }

    #[test]
    fn u_shape_defaults_give_the_standard_outline() {
        let mut cfg = PlanConfig::from_json(&minimal(r#"{"kind": "u_shape"}"#)).unwrap();
        cfg.layers = 5;
        let path = cfg.build_path(Path::new(".")).unwrap();
        // Five perimeters plus four seam climbs.
        assert!((path_length(&path) - (5.0 * 3.97 + 4.0 * 0.05)).abs() < 1e-9);
    }

    #[test]
    fn layered_line_alternates_direction() {
        let mut cfg = PlanConfig::from_json(&minimal(r#"{"kind": "line", "length": 2.0}"#)).unwrap();
        cfg.layers = 2;
        let path = cfg.build_path(Path::new(".")).unwrap();
        assert_eq!(path.len(), 4);
        assert_eq!(path[1][0], 2.0);
        assert_eq!(path[2][0], 2.0); // second layer starts where the first ended
        assert_eq!(path[3][0], 0.0);
        assert_eq!(path[2][2], 0.1);
    }

    #[test]
    fn path_file_resolves_relative_to_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let task_path = tasks::gen_line(1.5, 0.05).unwrap();
        tasks::save_path_file(&dir.path().join("seam.path"), &task_path).unwrap();
        let cfg =
            PlanConfig::from_json(&minimal(r#"{"kind": "path_file", "file": "seam.path"}"#))
                .unwrap();
        assert_eq!(cfg.build_path(dir.path()).unwrap(), task_path);
        // A missing file surfaces as a task error.
        let gone = PlanConfig::from_json(&minimal(
            r#"{"kind": "path_file", "file": "missing.path"}"#,
        ))
        .unwrap();
        assert!(gone.build_path(dir.path()).is_err());
    }

    #[test]
    fn json_round_trip_preserves_the_config() {
        let mut cfg = PlanConfig::from_json(&minimal(r#"{"kind": "u_shape"}"#)).unwrap();
        cfg.layers = 5;
        cfg.obstacles.push(Obstacle::Disc {
            center: (1.0, -0.5),
            radius: 0.25,
        });
        let text = cfg.to_json();
        let back = PlanConfig::from_json(&text).unwrap();
        assert_eq!(back.layers, 5);
        assert_eq!(back.obstacles, cfg.obstacles);
        assert_eq!(back.task, cfg.task);
        assert_eq!(back.dt, cfg.dt);
    }
}

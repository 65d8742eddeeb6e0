//! Print-path sampling, obstacles, and the admissible spacetime.
//!
//! The deposition path is swept at constant nozzle speed, one sample per
//! stage period. Each sample pins the nozzle for one stage; the admissible
//! set of that stage is every base grid pose from which the arm reaches the
//! sample (per-height reachable region) without the base footprint touching
//! an obstacle or material deposited at or before that stage's time.

use crate::grid::{GridKey, GridSpec};
use crate::reach::{is_reachable, ReachSet, ReachableRegion};
use std::collections::HashMap;
use thiserror::Error;

/// Arc-length slack when deciding whether the path length is a whole number
/// of per-stage steps, m.
const ARC_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("{name} must be positive and finite (got {value})")]
    BadParam { name: &'static str, value: f64 },
    #[error("print path needs at least two points with nonzero length")]
    PathTooShort,
    #[error("grid declares {grid} stages but the sampled path has {samples}")]
    StageCountMismatch { grid: usize, samples: usize },
    #[error("no reachable region extracted for height {height} m")]
    MissingRegion { height: f64 },
    #[error("stage {stage} (t = {t:.3} s) admits no base pose")]
    EmptyStage { stage: usize, t: f64 },
}

/// Nozzle waypoint: where the end-effector must be during one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EEPose {
    pub t: f64,
    pub pos: [f64; 3],
}

/// The print path sampled at one nozzle step per stage period.
#[derive(Debug, Clone)]
pub struct EETrajectory {
    samples: Vec<EEPose>,
    v_n: f64,
    dt: f64,
}

impl EETrajectory {
    pub fn samples(&self) -> &[EEPose] {
        &self.samples
    }

    /// Number of stage transitions (one fewer than samples).
    pub fn n_stages(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn v_n(&self) -> f64 {
        self.v_n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Distinct sample heights, ascending.
    pub fn heights(&self) -> Vec<f64> {
        let mut hs: Vec<f64> = self.samples.iter().map(|s| s.pos[2]).collect();
        hs.sort_by(f64::total_cmp);
        hs.dedup();
        hs
    }
}

/// Sweeps `path` at nozzle speed `v_n`, emitting one sample every `dt`
/// seconds of arc. The final vertex is always emitted verbatim; when the
/// length is not a whole number of steps the last stage covers the short
/// remainder at reduced nozzle speed.
pub fn sample_ee_trajectory(
    path: &[[f64; 3]],
    v_n: f64,
    dt: f64,
) -> Result<EETrajectory, WorldError> {
    for (name, value) in [("v_n", v_n), ("dt", dt)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(WorldError::BadParam { name, value });
        }
    }
    let total = crate::tasks::path_length(path);
    if path.len() < 2 || total <= 0.0 {
        return Err(WorldError::PathTooShort);
    }
    let step = v_n * dt;
    let n_full = {
        let n = (total / step).floor();
        // A hair under a whole step is float noise, not a remainder.
        if total - n * step > step - ARC_TOL {
            n as usize + 1
        } else {
            n as usize
        }
    };
    let remainder = total - n_full as f64 * step;
    let mut samples = Vec::with_capacity(n_full + 2);
    let mut seg = 0usize;
    let mut seg_start = 0.0; // arc length at path[seg]
    for k in 0..=n_full {
        let s = k as f64 * step;
        // Advance to the segment containing arc length s.
        loop {
            let a = path[seg];
            let b = path[seg + 1];
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2))
                .sqrt();
            if s <= seg_start + len + ARC_TOL || seg + 2 >= path.len() {
                let u = if len > 0.0 {
                    ((s - seg_start) / len).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                samples.push(EEPose {
                    t: k as f64 * dt,
                    pos: [
                        a[0] + u * (b[0] - a[0]),
                        a[1] + u * (b[1] - a[1]),
                        a[2] + u * (b[2] - a[2]),
                    ],
                });
                break;
            }
            seg_start += len;
            seg += 1;
        }
    }
    if remainder > ARC_TOL {
        samples.push(EEPose {
            t: (n_full + 1) as f64 * dt,
            pos: *path.last().unwrap(),
        });
    } else {
        // Exact multiple: pin the last sample to the final vertex so closed
        // paths end bit-identically where they started.
        let last = samples.last_mut().unwrap();
        last.pos = *path.last().unwrap();
    }
    if samples.len() < 2 {
        return Err(WorldError::PathTooShort);
    }
    Ok(EETrajectory {
        samples,
        v_n,
        dt,
    })
}

/// Static obstacle for the base footprint (planar).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obstacle {
    Disc { center: (f64, f64), radius: f64 },
    Rect { min: (f64, f64), max: (f64, f64) },
}

impl Obstacle {
    /// Planar distance from a point to the obstacle boundary (0 inside).
    fn distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Obstacle::Disc { center, radius } => {
                let d = ((x - center.0).powi(2) + (y - center.1).powi(2)).sqrt();
                (d - radius).max(0.0)
            }
            Obstacle::Rect { min, max } => {
                let dx = (min.0 - x).max(0.0).max(x - max.0);
                let dy = (min.1 - y).max(0.0).max(y - max.1);
                (dx * dx + dy * dy).sqrt()
            }
        }
    }
}

/// Base footprint, obstacles, and the growing printed part.
#[derive(Debug, Clone)]
pub struct WorldModel {
    /// Base footprint radius, m.
    r_b: f64,
    /// Clearance margin added around every obstacle, m.
    m_c: f64,
    obstacles: Vec<Obstacle>,
    /// Deposited points (t, x, y), hashed on a grid of cell size r_b + m_c.
    print_hash: HashMap<(i64, i64), Vec<(f64, f64, f64)>>,
}

impl WorldModel {
    pub fn new(r_b: f64, m_c: f64) -> Result<Self, WorldError> {
        if !(r_b.is_finite() && r_b > 0.0) {
            return Err(WorldError::BadParam {
                name: "r_b",
                value: r_b,
            });
        }
        if !(m_c.is_finite() && m_c >= 0.0) {
            return Err(WorldError::BadParam {
                name: "m_c",
                value: m_c,
            });
        }
        Ok(WorldModel {
            r_b,
            m_c,
            obstacles: Vec::new(),
            print_hash: HashMap::new(),
        })
    }

    pub fn r_b(&self) -> f64 {
        self.r_b
    }

    pub fn m_c(&self) -> f64 {
        self.m_c
    }

    pub fn add_obstacle(&mut self, obstacle: Obstacle) {
        self.obstacles.push(obstacle);
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    fn cell(&self, x: f64, y: f64) -> (i64, i64) {
        let c = self.r_b + self.m_c;
        ((x / c).floor() as i64, (y / c).floor() as i64)
    }

    /// Registers the deposition points of a sampled trajectory: each becomes
    /// a keep-out disc for the base once its timestamp has passed.
    pub fn add_print_trajectory(&mut self, traj: &EETrajectory) {
        for s in traj.samples() {
            let key = self.cell(s.pos[0], s.pos[1]);
            self.print_hash
                .entry(key)
                .or_default()
                .push((s.t, s.pos[0], s.pos[1]));
        }
    }

    /// True when a base centred at (x, y) at time t touches nothing: every
    /// obstacle stays at least r_b + m_c away (plus its own extent), and so
    /// does all material deposited at or before t.
    pub fn collision_free(&self, t: f64, x: f64, y: f64) -> bool {
        let clearance = self.r_b + self.m_c;
        for ob in &self.obstacles {
            if ob.distance(x, y) < clearance {
                return false;
            }
        }
        let (cx, cy) = self.cell(x, y);
        let r2 = clearance * clearance;
        for ix in (cx - 1)..=(cx + 1) {
            for iy in (cy - 1)..=(cy + 1) {
                if let Some(points) = self.print_hash.get(&(ix, iy)) {
                    for &(pt, px, py) in points {
                        if pt <= t {
                            let d2 = (x - px).powi(2) + (y - py).powi(2);
                            if d2 < r2 {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }
}

/// Admissible base poses of one stage, sorted by grid key.
#[derive(Debug, Clone)]
pub struct StageSet {
    /// Stage time, s.
    pub t: f64,
    /// Nozzle sample pinned during this stage.
    pub ee: [f64; 3],
    keys: Vec<GridKey>,
}

impl StageSet {
    /// Builds a stage set from raw keys (sorted and deduplicated here).
    pub fn new(t: f64, ee: [f64; 3], mut keys: Vec<GridKey>) -> Self {
        keys.sort();
        keys.dedup();
        StageSet { t, ee, keys }
    }

    pub fn keys(&self) -> &[GridKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn contains(&self, key: GridKey) -> bool {
        self.keys.binary_search(&key).is_ok()
    }
}

/// Per-stage admissible sets over the whole build.
#[derive(Debug, Clone)]
pub struct AdmissibleSpacetime {
    spec: GridSpec,
    stages: Vec<StageSet>,
}

impl AdmissibleSpacetime {
    /// Assembles an admissible spacetime from explicit stage sets, e.g. for
    /// synthetic planning instances. Counts must match the grid and no stage
    /// may be empty.
    pub fn from_parts(spec: GridSpec, stages: Vec<StageSet>) -> Result<Self, WorldError> {
        if stages.len() != spec.n_stages() + 1 {
            return Err(WorldError::StageCountMismatch {
                grid: spec.n_stages(),
                samples: stages.len().saturating_sub(1),
            });
        }
        for (i, s) in stages.iter().enumerate() {
            if s.is_empty() {
                return Err(WorldError::EmptyStage { stage: i, t: s.t });
            }
        }
        Ok(AdmissibleSpacetime { spec, stages })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// One set per sample; transitions run between consecutive entries.
    pub fn stages(&self) -> &[StageSet] {
        &self.stages
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len() - 1
    }

    /// Total admissible poses, summed over stages.
    pub fn total_keys(&self) -> usize {
        self.stages.iter().map(|s| s.len()).sum()
    }
}

/// Builds the admissible set of every stage by scanning the base grid in a
/// window around each nozzle sample. Fails on the first stage that admits no
/// pose at all.
pub fn build_admissible_spacetime(
    spec: &GridSpec,
    world: &WorldModel,
    reach: &ReachSet,
    ee: &EETrajectory,
) -> Result<AdmissibleSpacetime, WorldError> {
    if spec.n_stages() != ee.n_stages() {
        return Err(WorldError::StageCountMismatch {
            grid: spec.n_stages(),
            samples: ee.n_stages(),
        });
    }
    let mut stages = Vec::with_capacity(ee.samples().len());
    for (i, s) in ee.samples().iter().enumerate() {
        let region = reach
            .region_at(s.pos[2])
            .ok_or(WorldError::MissingRegion { height: s.pos[2] })?;
        let keys = scan_stage(spec, world, region, i, s);
        if keys.is_empty() {
            return Err(WorldError::EmptyStage { stage: i, t: s.t });
        }
        stages.push(StageSet {
            t: s.t,
            ee: s.pos,
            keys,
        });
    }
    Ok(AdmissibleSpacetime {
        spec: spec.clone(),
        stages,
    })
}

fn scan_stage(
    spec: &GridSpec,
    world: &WorldModel,
    region: &ReachableRegion,
    stage: usize,
    s: &EEPose,
) -> Vec<GridKey> {
    // The base can be at most this far (planar) from the nozzle sample.
    let dz = region.height - region.joint2.1;
    let planar = (region.r_max * region.r_max - dz * dz).max(0.0).sqrt();
    let r_pl = planar + region.joint2.0.abs();
    let center = spec.nearest_key(s.pos[0], s.pos[1], 0.0);
    let wx = (r_pl / spec.dx()).ceil() as i32 + 1;
    let wy = (r_pl / spec.dy()).ceil() as i32 + 1;
    let mut keys = Vec::new();
    for jx in (center.jx - wx)..=(center.jx + wx) {
        for jy in (center.jy - wy)..=(center.jy + wy) {
            let probe = spec.event(
                stage,
                GridKey {
                    jx,
                    jy,
                    jphi: 0,
                },
            );
            if !world.collision_free(s.t, probe.x, probe.y) {
                continue;
            }
            for jphi in 0..spec.n_phi() {
                let key = GridKey { jx, jy, jphi };
                let e = spec.event(stage, key);
                if is_reachable(region, (e.x, e.y, e.phi), (s.pos[0], s.pos[1])) {
                    keys.push(key);
                }
            }
        }
    }
    keys
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridParams;
    use crate::tasks::{gen_layers, gen_line, gen_square};
    use std::f64::consts::PI;

    #[test]
    fn line_sampling_matches_hand_count() {
        let path = gen_line(2.1, 0.05).unwrap();
        let traj = sample_ee_trajectory(&path, 0.1, 3.0).unwrap();
        assert_eq!(traj.samples().len(), 8);
        assert_eq!(traj.n_stages(), 7);
        assert_eq!(traj.duration(), 21.0);
        for (k, s) in traj.samples().iter().enumerate() {
            assert_eq!(s.t, k as f64 * 3.0);
            assert!((s.pos[0] - 0.3 * k as f64).abs() < 1e-12);
            assert_eq!(s.pos[2], 0.05);
        }
        assert_eq!(traj.samples().last().unwrap().pos, [2.1, 0.0, 0.05]);
    }

    #[test]
    fn single_step_path_has_two_samples() {
        let traj =
            sample_ee_trajectory(&[[0.0, 0.0, 0.05], [0.3, 0.0, 0.05]], 0.1, 3.0).unwrap();
        assert_eq!(traj.samples().len(), 2);
        assert_eq!(traj.samples()[0].pos, [0.0, 0.0, 0.05]);
        assert_eq!(traj.samples()[1].pos, [0.3, 0.0, 0.05]);
    }

    #[test]
    fn closed_square_returns_to_start_exactly() {
        let path = gen_layers(&gen_square(0.3).unwrap(), 1, 0.05).unwrap();
        let traj = sample_ee_trajectory(&path, 0.1, 3.0).unwrap();
        assert_eq!(traj.samples().len(), 5);
        assert_eq!(traj.samples()[0].pos, traj.samples()[4].pos);
    }

    #[test]
    fn partial_final_step_keeps_the_end_vertex() {
        let traj = sample_ee_trajectory(&gen_line(2.25, 0.05).unwrap(), 0.1, 3.0).unwrap();
        // Seven full 0.3 m steps plus a 0.15 m remainder stage.
        assert_eq!(traj.samples().len(), 9);
        assert_eq!(traj.duration(), 24.0);
        assert_eq!(traj.samples().last().unwrap().pos, [2.25, 0.0, 0.05]);
        assert!((traj.samples()[7].pos[0] - 2.1).abs() < 1e-12);
    }

    #[test]
    fn degenerate_paths_are_rejected() {
        assert!(matches!(
            sample_ee_trajectory(&[[0.0, 0.0, 0.0]], 0.1, 3.0),
            Err(WorldError::PathTooShort)
        ));
        assert!(matches!(
            sample_ee_trajectory(&[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]], 0.1, 3.0),
            Err(WorldError::PathTooShort)
        ));
        assert!(matches!(
            sample_ee_trajectory(&gen_line(1.0, 0.0).unwrap(), 0.1, -1.0),
            Err(WorldError::BadParam { name: "dt", .. })
        ));
    }

    #[test]
    fn disc_obstacle_clearance_is_closed() {
        let mut world = WorldModel::new(0.4, 0.05).unwrap();
        world.add_obstacle(Obstacle::Disc {
            center: (1.0, 0.0),
            radius: 0.2,
        });
        // Boundary-to-centre distance 0.7 >= 0.2 + 0.4 + 0.05.
        assert!(world.collision_free(0.0, 1.7, 0.0));
        assert!(!world.collision_free(0.0, 1.5, 0.0));
    }

    #[test]
    fn rect_obstacle_uses_boundary_distance() {
        let mut world = WorldModel::new(0.4, 0.05).unwrap();
        world.add_obstacle(Obstacle::Rect {
            min: (2.0, -1.0),
            max: (3.0, 1.0),
        });
        assert!(!world.collision_free(0.0, 1.56, 0.0)); // 0.44 away
        assert!(world.collision_free(0.0, 1.54, 0.0)); // 0.46 away
        assert!(!world.collision_free(0.0, 2.5, 0.5)); // inside
    }

    #[test]
    fn printed_points_block_only_after_their_time() {
        let traj = sample_ee_trajectory(&gen_line(2.1, 0.05).unwrap(), 0.1, 3.0).unwrap();
        let mut world = WorldModel::new(0.4, 0.05).unwrap();
        world.add_print_trajectory(&traj);
        // 0.44 m from the sample deposited at t = 6 (x = 0.6).
        assert!(world.collision_free(3.0, 0.6, 0.44));
        assert!(!world.collision_free(6.0, 0.6, 0.44));
        assert!(!world.collision_free(9.0, 0.6, 0.44));
        // 0.46 m away is always fine.
        assert!(world.collision_free(9.0, 0.6, 0.46));
    }

    fn test_region() -> ReachableRegion {
        ReachableRegion {
            r_min: 0.45,
            r_max: 0.8,
            x_min: 0.3,
            joint2: (0.1, 0.45),
            height: 0.05,
        }
    }

    #[test]
    fn stage_sets_match_a_brute_scan() {
        let path = gen_line(0.9, 0.05).unwrap();
        let traj = sample_ee_trajectory(&path, 0.1, 1.0).unwrap();
        let mut world = WorldModel::new(0.4, 0.05).unwrap();
        world.add_obstacle(Obstacle::Disc {
            center: (0.5, 0.8),
            radius: 0.1,
        });
        world.add_print_trajectory(&traj);
        let spec = GridSpec::new(
            GridParams::uniform(1.0, 0.1, PI / 2.0, 0.15, PI).with_stages(traj.n_stages()),
        )
        .unwrap();
        let reach = ReachSet::from_regions(vec![test_region()]);
        let aspace = build_admissible_spacetime(&spec, &world, &reach, &traj).unwrap();
        assert_eq!(aspace.stages().len(), traj.samples().len());

        // Unwindowed rescan with an independently written membership test;
        // grid placement itself comes from the grid module so closed
        // boundaries compare bit-identically.
        let region = test_region();
        for (i, s) in traj.samples().iter().enumerate() {
            let mut expect = Vec::new();
            for jx in -40..=40 {
                for jy in -40..=40 {
                    for jphi in 0..4 {
                        let key = GridKey { jx, jy, jphi };
                        let e = spec.event(i, key);
                        let dx = s.pos[0] - e.x;
                        let dy = s.pos[1] - e.y;
                        let px = e.phi.cos() * dx + e.phi.sin() * dy;
                        let py = -e.phi.sin() * dx + e.phi.cos() * dy;
                        let dz = region.height - region.joint2.1;
                        let r2 = (px - region.joint2.0) * (px - region.joint2.0)
                            + py * py
                            + dz * dz;
                        let reach_ok = px >= region.x_min
                            && r2 >= region.r_min * region.r_min
                            && r2 <= region.r_max * region.r_max;
                        if reach_ok && world.collision_free(s.t, e.x, e.y) {
                            expect.push(key);
                        }
                    }
                }
            }
            assert_eq!(aspace.stages()[i].keys(), expect.as_slice(), "stage {i}");
        }
    }

    #[test]
    fn unreachable_stage_is_reported_empty() {
        let traj = sample_ee_trajectory(&gen_line(0.9, 0.05).unwrap(), 0.1, 1.0).unwrap();
        let mut world = WorldModel::new(0.4, 0.05).unwrap();
        // A slab across the whole workspace leaves no admissible pose.
        world.add_obstacle(Obstacle::Rect {
            min: (-5.0, -5.0),
            max: (5.0, 5.0),
        });
        let spec = GridSpec::new(
            GridParams::uniform(1.0, 0.1, PI / 2.0, 0.15, PI).with_stages(traj.n_stages()),
        )
        .unwrap();
        let reach = ReachSet::from_regions(vec![test_region()]);
        match build_admissible_spacetime(&spec, &world, &reach, &traj) {
            Err(WorldError::EmptyStage { stage: 0, t }) => assert_eq!(t, 0.0),
            other => panic!("expected empty stage 0, got {other:?}"),
        }
    }

    #[test]
    fn stage_count_and_height_mismatches_error() {
        let traj = sample_ee_trajectory(&gen_line(0.9, 0.05).unwrap(), 0.1, 1.0).unwrap();
        let world = WorldModel::new(0.4, 0.05).unwrap();
        let reach = ReachSet::from_regions(vec![test_region()]);
        let wrong = GridSpec::new(
            GridParams::uniform(1.0, 0.1, PI / 2.0, 0.15, PI).with_stages(3),
        )
        .unwrap();
        assert!(matches!(
            build_admissible_spacetime(&wrong, &world, &reach, &traj),
            Err(WorldError::StageCountMismatch { grid: 3, samples: 9 })
        ));
        let spec = GridSpec::new(
            GridParams::uniform(1.0, 0.1, PI / 2.0, 0.15, PI).with_stages(traj.n_stages()),
        )
        .unwrap();
        let no_region = ReachSet::from_regions(vec![]);
        assert!(matches!(
            build_admissible_spacetime(&spec, &world, &no_region, &traj),
            Err(WorldError::MissingRegion { .. })
        ));
    }
}

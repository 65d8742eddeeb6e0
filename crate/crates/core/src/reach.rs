//! Reachable-workspace modelling for the arm.
//!
//! The nozzle workspace is sampled once into a voxel cloud (base frame, base
//! at the origin with zero yaw). For each print height a conservative annular
//! region is then extracted: a pair of radii about the shoulder axis such
//! that every lattice point of the slice inside the annulus is a reachable
//! voxel. Planning only ever asks "can the nozzle reach print point p from
//! base pose b", which reduces to a squared-distance window plus a forward
//! clearance bound, so the hot predicate is two multiplies and three
//! comparisons.

use crate::arm::{solve_arm_ik, ArmModel};
use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

/// Tolerance used when looking regions up by height, m.
const HEIGHT_LOOKUP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("{name} must be positive and finite (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("no valid annular region at height {height} m")]
    NoValidRegion { height: f64 },
    #[error("voxel file must start with 'delta <value>' (found {found:?})")]
    BadHeader { found: String },
    #[error("voxel file line {line}: {what}")]
    Parse { line: usize, what: String },
    #[error("voxel file i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Set of reachable nozzle positions, quantised to a cubic lattice with
/// spacing `delta`; a voxel index (ix, iy, iz) stands for the point
/// (ix*delta, iy*delta, iz*delta) in the base frame.
#[derive(Debug, Clone)]
pub struct VoxelCloud {
    delta: f64,
    voxels: BTreeSet<(i32, i32, i32)>,
}

impl VoxelCloud {
    pub fn new(delta: f64) -> Result<Self, ReachError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(ReachError::NonPositive {
                name: "delta",
                value: delta,
            });
        }
        Ok(VoxelCloud {
            delta,
            voxels: BTreeSet::new(),
        })
    }

    /// Samples the arm's workspace on the lattice: a voxel is kept when the
    /// analytic solver reaches its centre within joint limits and tool
    /// tolerance. z is scanned from the ground plane upwards.
    pub fn from_arm(arm: &ArmModel, delta: f64) -> Result<Self, ReachError> {
        let mut cloud = VoxelCloud::new(delta)?;
        let reach = arm.joint2_offset.0.abs() + arm.max_reach();
        let n_xy = (reach / delta).ceil() as i32 + 1;
        let n_z = ((arm.joint2_offset.1 + arm.max_reach()) / delta).ceil() as i32 + 1;
        let base = (0.0, 0.0, 0.0);
        for ix in -n_xy..=n_xy {
            for iy in -n_xy..=n_xy {
                for iz in 0..=n_z {
                    let c = cloud.center((ix, iy, iz));
                    if solve_arm_ik(arm, base, c).is_ok() {
                        cloud.voxels.insert((ix, iy, iz));
                    }
                }
            }
        }
        Ok(cloud)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn insert(&mut self, ix: i32, iy: i32, iz: i32) {
        self.voxels.insert((ix, iy, iz));
    }

    pub fn contains(&self, index: (i32, i32, i32)) -> bool {
        self.voxels.contains(&index)
    }

    pub fn center(&self, index: (i32, i32, i32)) -> [f64; 3] {
        [
            index.0 as f64 * self.delta,
            index.1 as f64 * self.delta,
            index.2 as f64 * self.delta,
        ]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, i32, i32)> + '_ {
        self.voxels.iter().copied()
    }

    /// Writes `delta <value>` then one sorted `ix iy iz` triple per line, so
    /// identical clouds serialise to identical bytes.
    pub fn save(&self, path: &Path) -> Result<(), ReachError> {
        let mut out = String::new();
        out.push_str(&format!("delta {}\n", self.delta));
        for (ix, iy, iz) in self.iter() {
            out.push_str(&format!("{ix} {iy} {iz}\n"));
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ReachError> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut cloud: Option<VoxelCloud> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let n = idx + 1;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            match &mut cloud {
                None => {
                    let mut it = text.split_whitespace();
                    if it.next() != Some("delta") {
                        return Err(ReachError::BadHeader {
                            found: text.to_string(),
                        });
                    }
                    let value: f64 = it
                        .next()
                        .ok_or_else(|| ReachError::Parse {
                            line: n,
                            what: "missing delta value".into(),
                        })?
                        .parse()
                        .map_err(|e| ReachError::Parse {
                            line: n,
                            what: format!("bad delta value: {e}"),
                        })?;
                    if it.next().is_some() {
                        return Err(ReachError::Parse {
                            line: n,
                            what: "trailing fields after delta".into(),
                        });
                    }
                    cloud = Some(VoxelCloud::new(value)?);
                }
                Some(c) => {
                    let fields: Vec<&str> = text.split_whitespace().collect();
                    if fields.len() != 3 {
                        return Err(ReachError::Parse {
                            line: n,
                            what: format!("expected 3 indices, found {}", fields.len()),
                        });
                    }
                    let mut v = [0i32; 3];
                    for (k, f) in fields.iter().enumerate() {
                        v[k] = f.parse().map_err(|e| ReachError::Parse {
                            line: n,
                            what: format!("bad index {f:?}: {e}"),
                        })?;
                    }
                    c.voxels.insert((v[0], v[1], v[2]));
                }
            }
        }
        cloud.ok_or(ReachError::BadHeader {
            found: String::new(),
        })
    }
}

/// Annular slice of the workspace at one print height, in the base frame.
///
/// A planar point (x, y) at the region's height is inside when its squared
/// distance to the shoulder axis point (joint2_x, 0, joint2_z) lies in
/// [r_min^2, r_max^2] and x clears the front of the base by `x_min`. All
/// comparisons are closed.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReachableRegion {
    pub r_min: f64,
    pub r_max: f64,
    /// Forward clearance: base-frame x must be at least this, m.
    pub x_min: f64,
    /// Shoulder position in the base frame: (forward offset, height), m.
    pub joint2: (f64, f64),
    /// Print height this region was extracted for, m.
    pub height: f64,
}

/// Why a point is inside or outside a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachClass {
    Reachable,
    /// In front clearance violated (x < x_min).
    OutsideClearance,
    TooNear,
    TooFar,
}

impl ReachableRegion {
    fn rho2(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.joint2.0;
        let dz = self.height - self.joint2.1;
        dx * dx + y * y + dz * dz
    }

    /// Membership for a base-frame planar point at the region height.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.classify(x, y) == ReachClass::Reachable
    }

    pub fn classify(&self, x: f64, y: f64) -> ReachClass {
        if x < self.x_min {
            return ReachClass::OutsideClearance;
        }
        let r2 = self.rho2(x, y);
        if r2 < self.r_min * self.r_min {
            ReachClass::TooNear
        } else if r2 > self.r_max * self.r_max {
            ReachClass::TooFar
        } else {
            ReachClass::Reachable
        }
    }

    /// Planar area of the annulus clipped to the clearance half-plane.
    pub fn area(&self) -> f64 {
        let c = self.x_min - self.joint2.0;
        clipped_disc_area(self.r_max, c) - clipped_disc_area(self.r_min, c)
    }
}

/// Area of a disc of radius `r` (centred at the origin) on the side x >= c.
fn clipped_disc_area(r: f64, c: f64) -> f64 {
    if r <= 0.0 || c >= r {
        0.0
    } else if c <= -r {
        std::f64::consts::PI * r * r
    } else {
        r * r * (c / r).acos() - c * (r * r - c * c).sqrt()
    }
}

/// True when the world-frame print point `p` is reachable from base pose
/// `base` = (x, y, yaw) according to `region`.
pub fn is_reachable(region: &ReachableRegion, base: (f64, f64, f64), p: (f64, f64)) -> bool {
    let (s, c) = base.2.sin_cos();
    let dx = p.0 - base.0;
    let dy = p.1 - base.1;
    region.contains(c * dx + s * dy, -s * dx + c * dy)
}

/// Extracts the widest valid annulus for one slice of the cloud.
///
/// Validity: on the slice's lattice (restricted to the clearance half-plane),
/// no point with squared shoulder distance inside [r_min^2, r_max^2] may be
/// missing from the cloud, and at least one cloud point must be inside.
/// Radii are half-lattice multiples and may not overhang the nearest /
/// farthest cloud point by more than half a voxel. Among valid pairs the
/// clipped annulus area is maximised; ties prefer the wider ring, then the
/// smaller inner radius.
pub fn extract_region(
    cloud: &VoxelCloud,
    joint2: (f64, f64),
    height: f64,
    x_min: f64,
) -> Result<ReachableRegion, ReachError> {
    let delta = cloud.delta();
    let half = delta / 2.0;
    let in_slice = |iz: i32| (iz as f64 * delta - height).abs() <= half;
    let iz_lo = ((height - delta) / delta).floor() as i32;
    let iz_hi = ((height + delta) / delta).ceil() as i32;
    let rho2 = |x: f64, y: f64| {
        let dx = x - joint2.0;
        let dz = height - joint2.1;
        dx * dx + y * y + dz * dz
    };

    // Cloud points that could anchor the annulus.
    let mut contained: Vec<f64> = Vec::new();
    for (ix, iy, iz) in cloud.iter() {
        if !in_slice(iz) {
            continue;
        }
        let c = cloud.center((ix, iy, iz));
        if c[0] >= x_min {
            contained.push(rho2(c[0], c[1]));
        }
    }
    if contained.is_empty() {
        return Err(ReachError::NoValidRegion { height });
    }
    contained.sort_by(f64::total_cmp);
    let min_c2 = contained[0];
    let max_c2 = contained[contained.len() - 1];

    // Candidate radii: half-lattice multiples, capped to overhang the
    // evidence by at most half a voxel on either side.
    let fit_le = |r2: f64| {
        let mut m = (r2.sqrt() / half).floor() as i64;
        while m > 0 && (m as f64 * half).powi(2) > r2 {
            m -= 1;
        }
        while ((m + 1) as f64 * half).powi(2) <= r2 {
            m += 1;
        }
        m
    };
    let m_lo = fit_le(min_c2).max(0);
    let mut m_hi = fit_le(max_c2);
    if (m_hi as f64 * half).powi(2) < max_c2 {
        m_hi += 1;
    }

    // Every lattice point of the slice (clearance side) that is absent from
    // the cloud blocks intervals containing its shoulder distance.
    let r_cap = m_hi as f64 * half;
    let mut blocking: Vec<f64> = Vec::new();
    let ix_lo = ((x_min / delta) - 1.0).floor() as i32;
    let ix_hi = ((joint2.0 + r_cap) / delta).ceil() as i32 + 1;
    let iy_cap = ((r_cap / delta).ceil() as i32) + 1;
    for ix in ix_lo..=ix_hi {
        let x = ix as f64 * delta;
        if x < x_min {
            continue;
        }
        for iy in -iy_cap..=iy_cap {
            let y = iy as f64 * delta;
            for iz in iz_lo..=iz_hi {
                if !in_slice(iz) {
                    continue;
                }
                let r2 = rho2(x, y);
                if r2 <= r_cap * r_cap && !cloud.contains((ix, iy, iz)) {
                    blocking.push(r2);
                }
            }
        }
    }
    blocking.sort_by(f64::total_cmp);

    let count_le = |v: &[f64], x: f64| v.partition_point(|&e| e <= x);
    let count_lt = |v: &[f64], x: f64| v.partition_point(|&e| e < x);

    let c_clip = x_min - joint2.0;
    let mut best: Option<(f64, f64, f64, f64)> = None; // (area, width, r_min, r_max)
    for ma in m_lo..=m_hi {
        let a = ma as f64 * half;
        let a2 = a * a;
        for mb in ma..=m_hi {
            let b = mb as f64 * half;
            let b2 = b * b;
            if count_le(&blocking, b2) - count_lt(&blocking, a2) > 0 {
                continue;
            }
            if count_le(&contained, b2) - count_lt(&contained, a2) == 0 {
                continue;
            }
            let area = clipped_disc_area(b, c_clip) - clipped_disc_area(a, c_clip);
            let width = b - a;
            let take = match best {
                None => true,
                Some((ba, bw, br, _)) => {
                    area > ba || (area == ba && (width > bw || (width == bw && a < br)))
                }
            };
            if take {
                best = Some((area, width, a, b));
            }
        }
    }
    match best {
        Some((_, _, r_min, r_max)) => Ok(ReachableRegion {
            r_min,
            r_max,
            x_min,
            joint2,
            height,
        }),
        None => Err(ReachError::NoValidRegion { height }),
    }
}

/// Per-height regions for a build, extracted from a single workspace cloud.
#[derive(Debug, Clone)]
pub struct ReachSet {
    regions: Vec<(f64, ReachableRegion)>,
}

impl ReachSet {
    /// Wraps pre-computed regions, e.g. hand-built ones in tests.
    pub fn from_regions(regions: Vec<ReachableRegion>) -> Self {
        ReachSet {
            regions: regions.into_iter().map(|r| (r.height, r)).collect(),
        }
    }

    /// Builds the cloud once and extracts one region per distinct height.
    pub fn build(
        arm: &ArmModel,
        delta: f64,
        x_min: f64,
        heights: &[f64],
    ) -> Result<Self, ReachError> {
        let cloud = VoxelCloud::from_arm(arm, delta)?;
        let mut hs: Vec<f64> = heights.to_vec();
        hs.sort_by(f64::total_cmp);
        hs.dedup_by(|a, b| (*a - *b).abs() <= HEIGHT_LOOKUP_TOL);
        let mut regions = Vec::with_capacity(hs.len());
        for h in hs {
            let region = extract_region(&cloud, arm.joint2_offset, h, x_min)?;
            regions.push((h, region));
        }
        Ok(ReachSet { regions })
    }

    pub fn region_at(&self, height: f64) -> Option<&ReachableRegion> {
        self.regions
            .iter()
            .find(|(h, _)| (h - height).abs() <= HEIGHT_LOOKUP_TOL)
            .map(|(_, r)| r)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(f64, ReachableRegion)> {
        self.regions.iter()
    }
}

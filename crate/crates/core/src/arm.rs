//! Analytic kinematics of the onboard work arm.
//!
//! The arm is a yaw joint on the base, a two-link chain (shoulder, elbow) in
//! the yaw-revolved vertical plane, and a wrist pitch that orients the nozzle.
//! The wrist is not part of the returned joint vector: it is servoed to point
//! the tool axis straight down whenever its limits allow, and the residual
//! tilt is reported. A configuration is usable when that tilt stays within the
//! tool-axis tolerance `alpha_max`.
//!
//! All angles are radians; in-plane link angles are measured from the
//! horizontal forward axis, counterclockwise positive (straight down = -pi/2).

use crate::grid::wrap_angle;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Slack allowed when a target sits exactly on the full-extension sphere.
const REACH_COS_TOL: f64 = 1e-9;
/// Two solutions closer than this (all joints) are the same branch.
const BRANCH_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ArmError {
    #[error("no joint solution reaches the target within limits and tool tolerance")]
    NoSolution,
    #[error("no joint solution at stage {stage} (t = {t:.3} s)")]
    NoSolutionAtStage { stage: usize, t: f64 },
    #[error("base and end-effector sequences differ in length ({bases} vs {targets})")]
    LengthMismatch { bases: usize, targets: usize },
    #[error("{name} must be positive and finite (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("joint limits for {name} are inverted ({lo} > {hi})")]
    BadLimits { name: &'static str, lo: f64, hi: f64 },
}

/// Geometric description of the arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    /// Shoulder (second joint) position in the base frame at zero yaw:
    /// forward offset and height, metres.
    pub joint2_offset: (f64, f64),
    /// Upper arm length, m.
    pub l1: f64,
    /// Forearm length, m.
    pub l2: f64,
    /// Yaw joint limits, rad (the yaw angle is compared after wrapping).
    pub yaw_limits: (f64, f64),
    /// Shoulder pitch limits, rad.
    pub shoulder_limits: (f64, f64),
    /// Elbow pitch limits, rad (0 = straight arm).
    pub elbow_limits: (f64, f64),
    /// Wrist pitch limits, rad, relative to the forearm.
    pub wrist_limits: (f64, f64),
    /// Maximum tolerated tilt of the tool axis away from straight down, rad.
    pub alpha_max: f64,
}

impl Default for ArmModel {
    fn default() -> Self {
        ArmModel {
            joint2_offset: (0.1, 0.45),
            l1: 0.4,
            l2: 0.4,
            yaw_limits: (-PI, PI),
            shoulder_limits: (-2.27, 2.27),
            elbow_limits: (-2.7, 2.7),
            wrist_limits: (-2.0, 2.0),
            alpha_max: 0.1,
        }
    }
}

impl ArmModel {
    pub fn validate(&self) -> Result<(), ArmError> {
        let positive = |name: &'static str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(ArmError::NonPositive { name, value })
            }
        };
        positive("l1", self.l1)?;
        positive("l2", self.l2)?;
        if !(self.alpha_max.is_finite() && self.alpha_max >= 0.0) {
            return Err(ArmError::NonPositive {
                name: "alpha_max",
                value: self.alpha_max,
            });
        }
        for (name, (lo, hi)) in [
            ("yaw", self.yaw_limits),
            ("shoulder", self.shoulder_limits),
            ("elbow", self.elbow_limits),
            ("wrist", self.wrist_limits),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ArmError::BadLimits { name, lo, hi });
            }
        }
        Ok(())
    }

    /// Upper bound on the distance from the shoulder to any reachable point.
    pub fn max_reach(&self) -> f64 {
        self.l1 + self.l2
    }
}

/// One analytic solution branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    /// Yaw of the arm plane, rad.
    pub yaw: f64,
    /// Shoulder pitch, rad.
    pub shoulder: f64,
    /// Elbow pitch relative to the upper arm, rad.
    pub elbow: f64,
    /// Implied wrist pitch after clamping to its limits, rad.
    pub wrist: f64,
    /// Residual tilt of the tool axis away from straight down, rad.
    pub axis_tilt: f64,
}

impl IkSolution {
    /// The reported joint vector: (yaw, shoulder, elbow).
    pub fn joints(&self) -> [f64; 3] {
        [self.yaw, self.shoulder, self.elbow]
    }
}

fn within(limits: (f64, f64), q: f64) -> bool {
    q >= limits.0 && q <= limits.1
}

/// Target expressed in the base frame.
fn to_base_frame(base: (f64, f64, f64), target: [f64; 3]) -> [f64; 3] {
    let (bx, by, bphi) = base;
    let (s, c) = bphi.sin_cos();
    let dx = target[0] - bx;
    let dy = target[1] - by;
    [c * dx + s * dy, -s * dx + c * dy, target[2]]
}

/// All analytic IK branches, in a fixed order: for each yaw candidate
/// (direct, then flipped by pi), elbow positive then negative. Branches
/// outside joint limits or whose tool tilt exceeds `alpha_max` are dropped;
/// coincident branches (straight arm) are merged.
pub fn solve_arm_ik(
    arm: &ArmModel,
    base: (f64, f64, f64),
    target: [f64; 3],
) -> Result<Vec<IkSolution>, ArmError> {
    let p = to_base_frame(base, target);
    let yaw0 = if p[0] == 0.0 && p[1] == 0.0 {
        0.0
    } else {
        p[1].atan2(p[0])
    };
    let mut out: Vec<IkSolution> = Vec::new();
    for yaw in [yaw0, wrap_angle(yaw0 + PI)] {
        if !within(arm.yaw_limits, yaw) {
            continue;
        }
        // Signed horizontal coordinate of the target in this arm plane.
        let (sy, cy) = yaw.sin_cos();
        let rho = cy * p[0] + sy * p[1];
        let wr = rho - arm.joint2_offset.0;
        let wz = p[2] - arm.joint2_offset.1;
        let m2 = wr * wr + wz * wz;
        let cos_e = (m2 - arm.l1 * arm.l1 - arm.l2 * arm.l2) / (2.0 * arm.l1 * arm.l2);
        if cos_e > 1.0 + REACH_COS_TOL || cos_e < -1.0 - REACH_COS_TOL {
            continue;
        }
        let elbow_mag = cos_e.clamp(-1.0, 1.0).acos();
        for elbow in [elbow_mag, -elbow_mag] {
            let shoulder = wz.atan2(wr)
                - (arm.l2 * elbow.sin()).atan2(arm.l1 + arm.l2 * elbow.cos());
            let shoulder = wrap_angle(shoulder);
            if !within(arm.shoulder_limits, shoulder) || !within(arm.elbow_limits, elbow) {
                continue;
            }
            // Wrist needed for a vertical tool axis, clamped to its limits.
            let wanted = wrap_angle(-FRAC_PI_2 - (shoulder + elbow));
            let wrist = wanted.clamp(arm.wrist_limits.0, arm.wrist_limits.1);
            let axis_tilt = (wanted - wrist).abs();
            if axis_tilt > arm.alpha_max + 1e-12 {
                continue;
            }
            let sol = IkSolution {
                yaw,
                shoulder,
                elbow,
                wrist,
                axis_tilt,
            };
            let duplicate = out.iter().any(|s| {
                (s.yaw - sol.yaw).abs() < BRANCH_MERGE_TOL
                    && (s.shoulder - sol.shoulder).abs() < BRANCH_MERGE_TOL
                    && (s.elbow - sol.elbow).abs() < BRANCH_MERGE_TOL
            });
            if !duplicate {
                out.push(sol);
            }
        }
    }
    if out.is_empty() {
        Err(ArmError::NoSolution)
    } else {
        Ok(out)
    }
}

/// True when some IK branch reaches `target` within limits and tolerance.
pub fn reachable(arm: &ArmModel, base: (f64, f64, f64), target: [f64; 3]) -> bool {
    solve_arm_ik(arm, base, target).is_ok()
}

/// Tool position and unit tool axis for a solution, in world coordinates.
pub fn forward_kinematics(
    arm: &ArmModel,
    base: (f64, f64, f64),
    sol: &IkSolution,
) -> ([f64; 3], [f64; 3]) {
    let (bx, by, bphi) = base;
    let rho = arm.joint2_offset.0
        + arm.l1 * sol.shoulder.cos()
        + arm.l2 * (sol.shoulder + sol.elbow).cos();
    let z = arm.joint2_offset.1
        + arm.l1 * sol.shoulder.sin()
        + arm.l2 * (sol.shoulder + sol.elbow).sin();
    let heading = bphi + sol.yaw;
    let (sh, ch) = heading.sin_cos();
    let pos = [bx + rho * ch, by + rho * sh, z];
    let axis_angle = sol.shoulder + sol.elbow + sol.wrist;
    let (sa, ca) = axis_angle.sin_cos();
    let axis = [ca * ch, ca * sh, sa];
    (pos, axis)
}

/// Largest per-joint step between two solutions (yaw wrapped).
fn joint_gap(a: &IkSolution, b: &IkSolution) -> [f64; 3] {
    [
        wrap_angle(b.yaw - a.yaw).abs(),
        (b.shoulder - a.shoulder).abs(),
        (b.elbow - a.elbow).abs(),
    ]
}

/// A joint-space jump larger than the threshold, flagged per joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpFlag {
    /// Stage the arm moves *into*.
    pub stage: usize,
    /// 0 = yaw, 1 = shoulder, 2 = elbow.
    pub joint: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct ContinuityReport {
    /// Largest step per joint over the whole trajectory.
    pub max_jump: [f64; 3],
    pub threshold: f64,
    pub flags: Vec<JumpFlag>,
}

#[derive(Debug, Clone)]
pub struct ArmTrajectory {
    pub solutions: Vec<IkSolution>,
    pub report: ContinuityReport,
}

/// Default joint-jump threshold, rad.
pub const DEFAULT_JUMP_THRESHOLD: f64 = 0.35;

/// Chains per-stage IK solutions greedily: at each stage the branch nearest
/// (largest per-joint step, yaw wrapped) to the previous selection wins, ties
/// going to the earlier branch in the fixed solver order. Continuity is
/// reported, not enforced; an unreachable stage is a hard error naming it.
pub fn solve_arm_trajectory(
    arm: &ArmModel,
    bases: &[(f64, f64, f64)],
    targets: &[[f64; 3]],
    dt: f64,
    jump_threshold: f64,
) -> Result<ArmTrajectory, ArmError> {
    if bases.len() != targets.len() {
        return Err(ArmError::LengthMismatch {
            bases: bases.len(),
            targets: targets.len(),
        });
    }
    let mut chosen: Vec<IkSolution> = Vec::with_capacity(bases.len());
    let mut report = ContinuityReport {
        max_jump: [0.0; 3],
        threshold: jump_threshold,
        flags: Vec::new(),
    };
    for (stage, (&base, &target)) in bases.iter().zip(targets).enumerate() {
        let sols = solve_arm_ik(arm, base, target).map_err(|_| ArmError::NoSolutionAtStage {
            stage,
            t: stage as f64 * dt,
        })?;
        let pick = match chosen.last() {
            None => sols[0],
            Some(prev) => {
                let mut best = sols[0];
                let mut best_gap = f64::INFINITY;
                for s in &sols {
                    let gap = joint_gap(prev, s);
                    let worst = gap[0].max(gap[1]).max(gap[2]);
                    if worst < best_gap {
                        best_gap = worst;
                        best = *s;
                    }
                }
                best
            }
        };
        if let Some(prev) = chosen.last() {
            let gap = joint_gap(prev, &pick);
            for (joint, g) in gap.iter().enumerate() {
                if *g > report.max_jump[joint] {
                    report.max_jump[joint] = *g;
                }
                if *g > jump_threshold {
                    report.flags.push(JumpFlag {
                        stage,
                        joint,
                        magnitude: *g,
                    });
                }
            }
        }
        chosen.push(pick);
    }
    Ok(ArmTrajectory {
        solutions: chosen,
        report,
    })
}

//! Densification, validation, and summary metrics for planned trajectories.
//!
//! The planner's output is a per-stage event sequence; here it is resampled
//! to a fixed rate for execution and audited: every event must be admissible
//! for its stage, every step must stay inside the velocity cone, and the
//! memoized costs must satisfy their own backward recurrence.

use crate::grid::{step_cost, wrap_angle, Event, GridSpec};
use crate::planner::PlanResult;
use crate::world::AdmissibleSpacetime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// How close `rate * dt` must be to a whole number of sub-steps.
const RATE_INT_TOL: f64 = 1e-6;
/// Relative tolerance for cost identities.
const COST_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PostError {
    #[error(
        "sample rate {rate} Hz gives {product} sub-steps per {dt} s stage; \
         need a whole number >= 1"
    )]
    BadRate { rate: f64, dt: f64, product: f64 },
    #[error("cannot densify fewer than two events")]
    TooFewEvents,
}

/// One fixed-rate sample of the executed base motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Yaw in `(-pi, pi]`.
    pub phi: f64,
}

/// The plan resampled at a fixed rate; stage knots are bit-exact copies of
/// the planned events.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    pub samples: Vec<DenseSample>,
    pub rate: f64,
}

/// Linearly interpolates the event sequence at `rate` Hz. Yaw moves along
/// the same shortest arc the step cost charges for, wrapping per sample, so
/// a stage may legitimately cross the +-pi seam. `rate * dt` must be a whole
/// number of sub-steps (within 1e-6).
pub fn interpolate(
    events: &[Event],
    spec: &GridSpec,
    rate: f64,
) -> Result<DenseTrajectory, PostError> {
    if events.len() < 2 {
        return Err(PostError::TooFewEvents);
    }
    let product = rate * spec.dt();
    let steps = product.round();
    if !(steps >= 1.0 && (product - steps).abs() <= RATE_INT_TOL) {
        return Err(PostError::BadRate {
            rate,
            dt: spec.dt(),
            product,
        });
    }
    let steps = steps as usize;
    let n = events.len() - 1;
    let mut samples = Vec::with_capacity(n * steps + 1);
    for (i, pair) in events.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let c = a.key.delta_to(b.key, spec.n_phi());
        let dphi = c.kphi as f64 * spec.dphi();
        for s in 0..steps {
            if s == 0 {
                // Knots are the planned events themselves, verbatim.
                samples.push(DenseSample {
                    t: a.t,
                    x: a.x,
                    y: a.y,
                    phi: a.phi,
                });
                continue;
            }
            let u = s as f64 / steps as f64;
            samples.push(DenseSample {
                t: (i as f64 + u) * spec.dt(),
                x: a.x + u * (b.x - a.x),
                y: a.y + u * (b.y - a.y),
                phi: wrap_angle(a.phi + u * dphi),
            });
        }
    }
    let last = events.last().unwrap();
    samples.push(DenseSample {
        t: last.t,
        x: last.x,
        y: last.y,
        phi: last.phi,
    });
    Ok(DenseTrajectory { samples, rate })
}

/// Violations found when auditing a plan against its admissible spacetime.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    /// True when the event count matches the stage count and stages are
    /// numbered consecutively from zero.
    pub shape_ok: bool,
    /// Stages whose event is not in the admissible set.
    pub membership_violations: Vec<usize>,
    /// Stages whose realized coordinates differ from their grid key's.
    pub coordinate_violations: Vec<usize>,
    /// Stages entered by a step outside the velocity cone.
    pub cone_violations: Vec<usize>,
    /// Stages where `g[i] = l[i] + g[i+1]` fails (relative 1e-9).
    pub bellman_violations: Vec<usize>,
    /// Reported total cost vs forward recomputation (relative 1e-9).
    pub cost_consistent: bool,
    pub recomputed_cost: f64,
}

impl ValidationReport {
    pub fn violation_count(&self) -> usize {
        self.membership_violations.len()
            + self.coordinate_violations.len()
            + self.cone_violations.len()
            + self.bellman_violations.len()
            + usize::from(!self.shape_ok)
            + usize::from(!self.cost_consistent)
    }

    pub fn is_clean(&self) -> bool {
        self.violation_count() == 0
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        if self.is_clean() {
            format!("clean (cost {})", self.recomputed_cost)
        } else {
            format!(
                "{} violations (shape_ok={}, membership={}, coords={}, cone={}, bellman={}, cost_ok={})",
                self.violation_count(),
                self.shape_ok,
                self.membership_violations.len(),
                self.coordinate_violations.len(),
                self.cone_violations.len(),
                self.bellman_violations.len(),
                self.cost_consistent,
            )
        }
    }
}

/// Audits a plan against the admissible spacetime it was planned on.
pub fn validate_plan(plan: &PlanResult, aspace: &AdmissibleSpacetime) -> ValidationReport {
    let spec = aspace.spec();
    let stages = aspace.stages();
    let mut report = ValidationReport {
        shape_ok: plan.events.len() == stages.len()
            && plan.cost_to_go.len() == plan.events.len()
            && plan.events.iter().enumerate().all(|(i, e)| e.stage == i),
        ..Default::default()
    };

    for (i, e) in plan.events.iter().enumerate() {
        if i < stages.len() && !stages[i].contains(e.key) {
            report.membership_violations.push(i);
        }
        let canon = spec.event(e.stage, e.key);
        if e.x != canon.x || e.y != canon.y || e.phi != canon.phi || e.t != canon.t {
            report.coordinate_violations.push(i);
        }
    }

    let mut forward = 0.0;
    for (i, pair) in plan.events.windows(2).enumerate() {
        let c = pair[0].key.delta_to(pair[1].key, spec.n_phi());
        if !spec.admits(c) {
            report.cone_violations.push(i + 1);
        }
        let l = step_cost(c, spec);
        forward += l;
        if i + 1 < plan.cost_to_go.len() {
            let expect = l + plan.cost_to_go[i + 1];
            let got = plan.cost_to_go[i];
            if (got - expect).abs() > COST_REL_TOL * expect.abs().max(1.0) {
                report.bellman_violations.push(i);
            }
        }
    }
    if let Some(&g_last) = plan.cost_to_go.last() {
        if g_last != 0.0 {
            report.bellman_violations.push(plan.events.len() - 1);
        }
    }
    report.recomputed_cost = forward;
    report.cost_consistent =
        (plan.cost - forward).abs() <= COST_REL_TOL * forward.abs().max(1.0);
    report
}

/// Summary figures of a planned base motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryMetrics {
    /// Planar base path length, m.
    pub length: f64,
    /// Total yaw swept along shortest arcs, rad.
    pub yaw_travel: f64,
    pub duration: f64,
    /// length / duration, m/s (0 for an empty duration).
    pub avg_speed: f64,
    /// Axis-aligned planar bounds: (min_x, min_y, max_x, max_y).
    pub bbox: (f64, f64, f64, f64),
    /// Stages during which the base does not move at all.
    pub dwell_stages: usize,
}

pub fn trajectory_metrics(events: &[Event], spec: &GridSpec) -> TrajectoryMetrics {
    let mut length = 0.0;
    let mut yaw = 0.0;
    let mut dwell = 0;
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for e in events {
        min_x = min_x.min(e.x);
        min_y = min_y.min(e.y);
        max_x = max_x.max(e.x);
        max_y = max_y.max(e.y);
    }
    for pair in events.windows(2) {
        let c = pair[0].key.delta_to(pair[1].key, spec.n_phi());
        let dx = c.kx as f64 * spec.dx();
        let dy = c.ky as f64 * spec.dy();
        length += (dx * dx + dy * dy).sqrt();
        yaw += (c.kphi as f64 * spec.dphi()).abs();
        if c.kx == 0 && c.ky == 0 && c.kphi == 0 {
            dwell += 1;
        }
    }
    let duration = events.last().map_or(0.0, |e| e.t) - events.first().map_or(0.0, |e| e.t);
    TrajectoryMetrics {
        length,
        yaw_travel: yaw,
        duration,
        avg_speed: if duration > 0.0 { length / duration } else { 0.0 },
        bbox: (min_x, min_y, max_x, max_y),
        dwell_stages: dwell,
    }
}

/// Seeded spot check that a dense trajectory is consistent with its plan:
/// random samples are compared against an independent interpolation from the
/// bracketing events. Returns the indices of inconsistent samples.
pub fn audit_dense(
    dense: &DenseTrajectory,
    plan: &PlanResult,
    spec: &GridSpec,
    seed: u64,
    checks: usize,
) -> Vec<usize> {
    let steps = (dense.rate * spec.dt()).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    if steps == 0 || dense.samples.is_empty() {
        return bad;
    }
    for _ in 0..checks {
        let idx = rng.gen_range(0..dense.samples.len());
        let sample = dense.samples[idx];
        let stage = (idx / steps).min(plan.events.len() - 1);
        let ok = if idx % steps == 0 || stage + 1 >= plan.events.len() {
            let e = &plan.events[stage.min(plan.events.len() - 1)];
            sample.x == e.x && sample.y == e.y && sample.phi == e.phi
        } else {
            let a = &plan.events[stage];
            let b = &plan.events[stage + 1];
            let u = (idx % steps) as f64 / steps as f64;
            let c = a.key.delta_to(b.key, spec.n_phi());
            let phi = wrap_angle(a.phi + u * (c.kphi as f64 * spec.dphi()));
            (sample.x - (a.x + u * (b.x - a.x))).abs() <= 1e-12
                && (sample.y - (a.y + u * (b.y - a.y))).abs() <= 1e-12
                && (sample.phi - phi).abs() <= 1e-12
        };
        if !ok {
            bad.push(idx);
        }
    }
    bad.sort_unstable();
    bad.dedup();
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridKey, GridParams};
    use crate::planner::{brute_force_plan, mobocontp};
    use crate::world::{AdmissibleSpacetime, StageSet};
    use std::f64::consts::PI;

    fn spec_1d(n: usize) -> GridSpec {
        GridSpec::new(GridParams::uniform(3.0, 0.05, PI / 30.0, 0.15, PI / 10.0).with_stages(n))
            .unwrap()
    }

    #[test]
    fn ten_hertz_densification_has_31_samples() {
        let spec = spec_1d(1);
        let events = vec![
            spec.event(0, GridKey::new(0, 0, 0)),
            spec.event(1, GridKey::new(1, 0, 0)),
        ];
        let dense = interpolate(&events, &spec, 10.0).unwrap();
        assert_eq!(dense.samples.len(), 31);
        let mid = dense.samples[15];
        assert!((mid.x - 0.075).abs() < 1e-12);
        assert!((mid.t - 1.5).abs() < 1e-12);
        // Knots are bit-exact event copies.
        assert_eq!(dense.samples[0].x, events[0].x);
        assert_eq!(dense.samples[30].x, events[1].x);
        assert_eq!(dense.samples[30].t, 3.0);
    }

    #[test]
    fn yaw_interpolation_crosses_the_seam() {
        // dphi = pi/12; from bin 11 (phi = 11*pi/12) two positive steps end
        // at -11*pi/12, passing through +pi.
        let spec = GridSpec::new(
            GridParams::uniform(1.0, 0.1, PI / 12.0, 0.2, PI / 6.0).with_stages(1),
        )
        .unwrap();
        let events = vec![
            spec.event(0, GridKey::new(0, 0, 11)),
            spec.event(1, GridKey::new(0, 0, 13)),
        ];
        let dense = interpolate(&events, &spec, 12.0).unwrap();
        assert_eq!(dense.samples.len(), 13);
        assert!(dense.samples.iter().all(|s| s.phi > -PI && s.phi <= PI));
        // Quarter way: still positive; three quarters: wrapped negative.
        assert!((dense.samples[3].phi - 23.0 * PI / 24.0).abs() < 1e-12);
        assert!((dense.samples[9].phi + 23.0 * PI / 24.0).abs() < 1e-12);
    }

    #[test]
    fn non_integral_rates_are_rejected() {
        let spec = spec_1d(1);
        let events = vec![
            spec.event(0, GridKey::new(0, 0, 0)),
            spec.event(1, GridKey::new(1, 0, 0)),
        ];
        // 0.1 Hz * 3 s = 0.3 sub-steps: below one.
        assert!(matches!(
            interpolate(&events, &spec, 0.1),
            Err(PostError::BadRate { .. })
        ));
        // 10.1 Hz * 3 s = 30.3: not whole.
        assert!(matches!(
            interpolate(&events, &spec, 10.1),
            Err(PostError::BadRate { .. })
        ));
        assert!(matches!(
            interpolate(&events[..1], &spec, 10.0),
            Err(PostError::TooFewEvents)
        ));
    }

    #[test]
    fn metrics_match_hand_values() {
        // One 0.1 m step over 2.5 s.
        let spec = GridSpec::new(
            GridParams::uniform(2.5, 0.04, PI / 30.0, 0.08, PI / 10.0).with_stages(1),
        )
        .unwrap();
        let events = vec![
            spec.event(0, GridKey::new(0, 0, 0)),
            spec.event(1, GridKey::new(1, 0, 0)),
        ];
        let m = trajectory_metrics(&events, &spec);
        assert!((m.length - 0.1).abs() < 1e-12);
        assert_eq!(m.duration, 2.5);
        assert!((m.avg_speed - 0.04).abs() < 1e-12);

        // A closed square loop, side 0.2 m.
        let spec = GridSpec::new(
            GridParams::uniform(2.0, 0.1, PI / 30.0, 0.1, PI / 10.0).with_stages(4),
        )
        .unwrap();
        let keys = [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)];
        let events: Vec<Event> = keys
            .iter()
            .enumerate()
            .map(|(i, &(jx, jy))| spec.event(i, GridKey::new(jx, jy, 0)))
            .collect();
        let m = trajectory_metrics(&events, &spec);
        assert!((m.length - 0.8).abs() < 1e-12);
        assert_eq!(m.bbox, (0.0, 0.0, 0.2, 0.2));
        assert_eq!(m.dwell_stages, 0);
        assert_eq!(m.yaw_travel, 0.0);
    }

    fn small_instance() -> AdmissibleSpacetime {
        let spec = GridSpec::new(
            GridParams::uniform(1.0, 0.1, PI / 3.0, 0.2, 2.0 * PI / 3.0).with_stages(3),
        )
        .unwrap();
        let mk = |keys: Vec<(i32, i32, i32)>, i: usize| {
            StageSet::new(
                i as f64,
                [0.0, 0.0, 0.0],
                keys.into_iter()
                    .map(|(a, b, c)| GridKey::new(a, b, c))
                    .collect(),
            )
        };
        AdmissibleSpacetime::from_parts(
            spec,
            vec![
                mk(vec![(0, 0, 0)], 0),
                mk(vec![(1, 0, 0), (0, 1, 1)], 1),
                mk(vec![(2, 0, 0), (1, 1, 1)], 2),
                mk(vec![(2, 1, 1)], 3),
            ],
        )
        .unwrap()
    }

    #[test]
    fn valid_plans_audit_clean() {
        let aspace = small_instance();
        for plan in [mobocontp(&aspace).unwrap(), brute_force_plan(&aspace).unwrap()] {
            let report = validate_plan(&plan, &aspace);
            assert!(report.is_clean(), "{}", report.summary());
            assert_eq!(report.recomputed_cost, plan.cost);
        }
    }

    #[test]
    fn corruption_is_detected() {
        let aspace = small_instance();
        let spec = aspace.spec();
        let good = mobocontp(&aspace).unwrap();

        // Key outside the stage's admissible set (still cone-reachable).
        let mut bad = good.clone();
        bad.events[1] = spec.event(1, GridKey::new(0, 0, 0));
        let r = validate_plan(&bad, &aspace);
        assert_eq!(r.membership_violations, vec![1]);

        // Physically impossible jump.
        let mut bad = good.clone();
        bad.events[1] = spec.event(1, GridKey::new(9, 9, 0));
        let r = validate_plan(&bad, &aspace);
        assert!(r.cone_violations.contains(&1));

        // Drifted coordinates.
        let mut bad = good.clone();
        bad.events[2].x += 1e-7;
        let r = validate_plan(&bad, &aspace);
        assert_eq!(r.coordinate_violations, vec![2]);

        // Tampered memoized costs and total.
        let mut bad = good.clone();
        bad.cost_to_go[0] += 0.5;
        assert!(!validate_plan(&bad, &aspace).bellman_violations.is_empty());
        let mut bad = good;
        bad.cost += 1.0;
        assert!(!validate_plan(&bad, &aspace).cost_consistent);
    }

    #[test]
    fn dense_audit_passes_and_detects() {
        let aspace = small_instance();
        let plan = mobocontp(&aspace).unwrap();
        let dense = interpolate(&plan.events, aspace.spec(), 5.0).unwrap();
        assert!(audit_dense(&dense, &plan, aspace.spec(), 42, 200).is_empty());
        let mut broken = dense;
        let mid = broken.samples.len() / 2;
        broken.samples[mid].x += 0.01;
        assert!(!audit_dense(&broken, &plan, aspace.spec(), 42, 500).is_empty());
    }
}

//! Discrete spacetime grid for a holonomic planar base.
//!
//! A base configuration over time is an *event* `(t, x, y, phi)`. Time advances
//! in fixed steps `dt`; space is discretized so that every admissible velocity
//! moves the base from grid point to grid point: `dx = dv_x * dt`,
//! `dy = dv_y * dt`, `dphi = domega * dt`. Controls are therefore integer step
//! triples `(kx, ky, kphi)`, and a trajectory never accumulates floating-point
//! drift: coordinates are always derived from integer indices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for requiring that the yaw step divide the full circle.
const CIRCLE_CLOSE_REL_TOL: f64 = 1e-9;

/// Relative slack on the closed speed-cone boundary.
///
/// Control speeds are integer multiples of the resolution. When a limit is
/// itself such a multiple (say a top speed of three velocity steps), the
/// product `3 * dv` and the limit literal can disagree in their last bit, and
/// a bare squared compare would drop the full-speed control. Genuine
/// violations overshoot by at least one whole resolution step, which is many
/// orders of magnitude beyond this slack, so closure stays exact in effect.
const CONE_REL_TOL: f64 = 1e-12;

/// Closed comparison `sq <= limit^2` that survives last-bit rounding.
fn within_closed(sq: f64, limit: f64) -> bool {
    sq <= limit * limit * (1.0 + CONE_REL_TOL)
}

/// Wraps an angle into `(-pi, pi]`.
///
/// Panics on non-finite input; angles must be validated at the boundary.
pub fn wrap_angle(phi: f64) -> f64 {
    assert!(phi.is_finite(), "wrap_angle: non-finite angle {phi}");
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = phi.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("{name} must be positive and finite (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("cost weight must be finite and >= 0 (got {0})")]
    BadWeight(f64),
    #[error(
        "yaw step domega*dt = {dphi} rad does not divide the circle \
         ({n} bins span {span} rad, not 2*pi); nearest closing rate is domega = {suggested} rad/s"
    )]
    OpenCircle {
        dphi: f64,
        n: i64,
        span: f64,
        suggested: f64,
    },
    #[error("origin must be finite (got {0}, {1}, {2})")]
    BadOrigin(f64, f64, f64),
    #[error("cannot apply a control at stage {stage}: final stage is {n_stages}")]
    PastFinalStage { stage: usize, n_stages: usize },
    #[error("events {at} and {next} are not on consecutive stages")]
    NonConsecutiveStages { at: usize, next: usize },
    #[error("step into stage {stage} is outside the velocity cone")]
    InadmissibleStep { stage: usize },
}

/// User-facing grid parameters; validated by [`GridSpec::new`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridParams {
    /// Stage duration in seconds.
    pub dt: f64,
    /// Velocity resolution along x, m/s.
    pub dv_x: f64,
    /// Velocity resolution along y, m/s.
    pub dv_y: f64,
    /// Yaw rate resolution, rad/s.
    pub domega: f64,
    /// Translational speed limit, m/s.
    pub v_max: f64,
    /// Yaw rate limit, rad/s.
    pub omega_max: f64,
    /// Rotation weight in the step cost, m^2/rad^2.
    pub w: f64,
    /// World anchor of the grid: `(x0, y0, phi0)`.
    pub origin: (f64, f64, f64),
    /// Number of stages `N`; events live on stages `0..=N`.
    pub n_stages: usize,
}

impl GridParams {
    /// Uniform resolution helper: `dv` for both axes.
    pub fn uniform(dt: f64, dv: f64, domega: f64, v_max: f64, omega_max: f64) -> Self {
        GridParams {
            dt,
            dv_x: dv,
            dv_y: dv,
            domega,
            v_max,
            omega_max,
            w: 0.1,
            origin: (0.0, 0.0, 0.0),
            n_stages: 0,
        }
    }

    pub fn with_origin(mut self, x0: f64, y0: f64, phi0: f64) -> Self {
        self.origin = (x0, y0, phi0);
        self
    }

    pub fn with_stages(mut self, n: usize) -> Self {
        self.n_stages = n;
        self
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.w = w;
        self
    }
}

/// Validated, immutable grid description.
#[derive(Debug, Clone)]
pub struct GridSpec {
    dt: f64,
    dv_x: f64,
    dv_y: f64,
    domega: f64,
    v_max: f64,
    omega_max: f64,
    w: f64,
    origin: (f64, f64, f64),
    n_stages: usize,
    dx: f64,
    dy: f64,
    dphi: f64,
    n_phi: i32,
}

impl GridSpec {
    pub fn new(p: GridParams) -> Result<GridSpec, GridError> {
        let positive = |name: &'static str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(value)
            } else {
                Err(GridError::NonPositive { name, value })
            }
        };
        let dt = positive("dt", p.dt)?;
        let dv_x = positive("dv_x", p.dv_x)?;
        let dv_y = positive("dv_y", p.dv_y)?;
        let domega = positive("domega", p.domega)?;
        let v_max = positive("v_max", p.v_max)?;
        let omega_max = positive("omega_max", p.omega_max)?;
        if !p.w.is_finite() || p.w < 0.0 {
            return Err(GridError::BadWeight(p.w));
        }
        let (x0, y0, phi0) = p.origin;
        if !(x0.is_finite() && y0.is_finite() && phi0.is_finite()) {
            return Err(GridError::BadOrigin(x0, y0, phi0));
        }

        let two_pi = 2.0 * std::f64::consts::PI;
        let dphi = domega * dt;
        let n = (two_pi / dphi).round();
        let span = n * dphi;
        if n < 1.0 || (span - two_pi).abs() > CIRCLE_CLOSE_REL_TOL * two_pi {
            let n_fix = (two_pi / dphi).round().max(1.0);
            return Err(GridError::OpenCircle {
                dphi,
                n: n as i64,
                span,
                suggested: two_pi / (n_fix * dt),
            });
        }

        Ok(GridSpec {
            dt,
            dv_x,
            dv_y,
            domega,
            v_max,
            omega_max,
            w: p.w,
            origin: (x0, y0, wrap_angle(phi0)),
            n_stages: p.n_stages,
            dx: dv_x * dt,
            dy: dv_y * dt,
            dphi,
            n_phi: n as i32,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn dv_x(&self) -> f64 {
        self.dv_x
    }
    pub fn dv_y(&self) -> f64 {
        self.dv_y
    }
    pub fn domega(&self) -> f64 {
        self.domega
    }
    pub fn v_max(&self) -> f64 {
        self.v_max
    }
    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }
    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn origin(&self) -> (f64, f64, f64) {
        self.origin
    }
    pub fn n_stages(&self) -> usize {
        self.n_stages
    }
    /// Spatial step along x, `dv_x * dt`.
    pub fn dx(&self) -> f64 {
        self.dx
    }
    /// Spatial step along y, `dv_y * dt`.
    pub fn dy(&self) -> f64 {
        self.dy
    }
    /// Yaw step, `domega * dt`.
    pub fn dphi(&self) -> f64 {
        self.dphi
    }
    /// Number of yaw bins; `n_phi * dphi == 2*pi` up to round-off.
    pub fn n_phi(&self) -> i32 {
        self.n_phi
    }

    /// Velocity-cone admissibility of an integer control.
    ///
    /// The boundary is closed: a control whose speed equals the limit exactly
    /// is admissible. One floating rule everywhere: compare squared speeds,
    /// with [`within_closed`]'s slack so the boundary survives rounding.
    pub fn admits(&self, c: Control) -> bool {
        let vx = c.kx as f64 * self.dv_x;
        let vy = c.ky as f64 * self.dv_y;
        let om = c.kphi as f64 * self.domega;
        within_closed(vx * vx + vy * vy, self.v_max)
            && within_closed(om * om, self.omega_max)
    }

    /// Largest admissible `|kx|`, `|ky|`, `|kphi|`.
    pub fn control_bounds(&self) -> (i32, i32, i32) {
        // The division can land one bit under an exact multiple of the step,
        // so probe one index higher with the same closed-boundary rule.
        let top = |limit: f64, step: f64| {
            let k = (limit / step).floor() as i32;
            let up = (k + 1) as f64 * step;
            if within_closed(up * up, limit) {
                k + 1
            } else {
                k
            }
        };
        (
            top(self.v_max, self.dv_x),
            top(self.v_max, self.dv_y),
            top(self.omega_max, self.domega),
        )
    }

    /// Realizes the event at `(stage, key)`.
    pub fn event(&self, stage: usize, key: GridKey) -> Event {
        let (x0, y0, phi0) = self.origin;
        Event {
            stage,
            key,
            t: stage as f64 * self.dt,
            x: x0 + key.jx as f64 * self.dx,
            y: y0 + key.jy as f64 * self.dy,
            phi: wrap_angle(phi0 + key.jphi as f64 * self.dphi),
        }
    }

    /// Grid key whose realized position is nearest `(x, y, phi)`.
    pub fn nearest_key(&self, x: f64, y: f64, phi: f64) -> GridKey {
        let (x0, y0, phi0) = self.origin;
        let jphi = ((wrap_angle(phi) - phi0) / self.dphi).round() as i32;
        GridKey {
            jx: ((x - x0) / self.dx).round() as i32,
            jy: ((y - y0) / self.dy).round() as i32,
            jphi: jphi.rem_euclid(self.n_phi),
        }
    }
}

/// Integer grid indices of a base configuration. Order is lexicographic in
/// `(jx, jy, jphi)`; every deterministic tie-break in the planner uses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridKey {
    pub jx: i32,
    pub jy: i32,
    pub jphi: i32,
}

impl GridKey {
    pub fn new(jx: i32, jy: i32, jphi: i32) -> Self {
        GridKey { jx, jy, jphi }
    }

    /// Index shift by a control; yaw wraps on the circular grid.
    pub fn shifted(self, c: Control, n_phi: i32) -> GridKey {
        GridKey {
            jx: self.jx + c.kx,
            jy: self.jy + c.ky,
            jphi: (self.jphi + c.kphi).rem_euclid(n_phi),
        }
    }

    /// Control taking `self` to `to`, with the yaw step taken the short way
    /// round (ties resolved toward positive rotation).
    pub fn delta_to(self, to: GridKey, n_phi: i32) -> Control {
        let dj = (to.jphi - self.jphi).rem_euclid(n_phi);
        let kphi = if 2 * dj > n_phi { dj - n_phi } else { dj };
        Control {
            kx: to.jx - self.jx,
            ky: to.jy - self.jy,
            kphi,
        }
    }
}

/// A spacetime event: grid indices plus the realized coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub stage: usize,
    pub key: GridKey,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Yaw in `(-pi, pi]`.
    pub phi: f64,
}

/// Integer control steps; the realized displacement over one stage is
/// `(kx*dx, ky*dy, kphi*dphi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Control {
    pub kx: i32,
    pub ky: i32,
    pub kphi: i32,
}

impl Control {
    pub const ZERO: Control = Control {
        kx: 0,
        ky: 0,
        kphi: 0,
    };

    pub fn new(kx: i32, ky: i32, kphi: i32) -> Self {
        Control { kx, ky, kphi }
    }

    pub fn negated(self) -> Control {
        Control {
            kx: -self.kx,
            ky: -self.ky,
            kphi: -self.kphi,
        }
    }
}

/// Displacement cost of one control over one stage:
/// `(dx^2 + dy^2 + w * dphi^2) / dt`.
pub fn step_cost(c: Control, spec: &GridSpec) -> f64 {
    let dx = c.kx as f64 * spec.dx;
    let dy = c.ky as f64 * spec.dy;
    let dphi = c.kphi as f64 * spec.dphi;
    (dx * dx + dy * dy + spec.w * dphi * dphi) / spec.dt
}

/// Sum of step costs along a stage-consecutive event sequence, accumulated in
/// stage order so every caller sees the same floating-point value.
pub fn total_cost(events: &[Event], spec: &GridSpec) -> Result<f64, GridError> {
    let mut total = 0.0;
    for (i, pair) in events.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if b.stage != a.stage + 1 {
            return Err(GridError::NonConsecutiveStages {
                at: a.stage,
                next: b.stage,
            });
        }
        let c = a.key.delta_to(b.key, spec.n_phi);
        if !spec.admits(c) {
            return Err(GridError::InadmissibleStep { stage: i + 1 });
        }
        total += step_cost(c, spec);
    }
    Ok(total)
}

/// Applies a control to an event, advancing one stage.
pub fn apply_control(e: &Event, c: Control, spec: &GridSpec) -> Result<Event, GridError> {
    if e.stage >= spec.n_stages {
        return Err(GridError::PastFinalStage {
            stage: e.stage,
            n_stages: spec.n_stages,
        });
    }
    Ok(spec.event(e.stage + 1, e.key.shifted(c, spec.n_phi)))
}

/// The admissible control set: every integer step triple inside the velocity
/// cone, in lexicographic `(kx, ky, kphi)` order.
#[derive(Debug, Clone)]
pub struct ControlSet {
    controls: Vec<Control>,
    bounds: (i32, i32, i32),
}

impl ControlSet {
    pub fn build(spec: &GridSpec) -> ControlSet {
        let (mx, my, mphi) = spec.control_bounds();
        let mut controls = Vec::new();
        for kx in -mx..=mx {
            for ky in -my..=my {
                for kphi in -mphi..=mphi {
                    let c = Control { kx, ky, kphi };
                    if spec.admits(c) {
                        controls.push(c);
                    }
                }
            }
        }
        ControlSet {
            controls,
            bounds: (mx, my, mphi),
        }
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Control> + '_ {
        self.controls.iter().copied()
    }

    pub fn as_slice(&self) -> &[Control] {
        &self.controls
    }

    /// Largest admissible `|kx|`, `|ky|`, `|kphi|` (cheap pre-filter).
    pub fn bounds(&self) -> (i32, i32, i32) {
        self.bounds
    }

    pub fn contains(&self, c: Control, spec: &GridSpec) -> bool {
        spec.admits(c)
    }
}

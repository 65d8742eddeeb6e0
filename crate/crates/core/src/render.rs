//! Plain SVG rendering of plans for quick visual inspection.
//!
//! Everything is emitted through one fixed-precision formatter so that the
//! same plan always serializes to the same bytes, which the determinism
//! checks rely on.

use crate::grid::{Event, GridSpec};
use crate::world::Obstacle;
use std::fmt::Write as _;

/// Canvas geometry; all lengths in CSS pixels.
#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    pub width: f64,
    pub margin: f64,
    /// Length of the yaw tick drawn at each base pose, in world metres.
    pub yaw_tick: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            width: 800.0,
            margin: 40.0,
            yaw_tick: 0.12,
        }
    }
}

/// Fixed three-decimal formatting; the one path all coordinates go through.
fn fmt3(v: f64) -> String {
    // Avoid the distinct "-0.000" spelling for tiny negative values.
    let s = format!("{:.3}", v);
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// Axis-aligned bounds accumulator for auto-framing.
#[derive(Debug, Clone, Copy)]
struct Bounds {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

impl Bounds {
    fn empty() -> Bounds {
        Bounds {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        }
    }

    fn grow(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
    }
}

/// Affine world-to-screen map with a fixed pixel width and preserved aspect.
struct Frame {
    min_x: f64,
    min_y: f64,
    scale: f64,
    height: f64,
    margin: f64,
}

impl Frame {
    fn fit(min_x: f64, min_y: f64, max_x: f64, max_y: f64, opts: &RenderOptions) -> Frame {
        let span_x = (max_x - min_x).max(1e-3);
        let span_y = (max_y - min_y).max(1e-3);
        let scale = (opts.width - 2.0 * opts.margin) / span_x;
        Frame {
            min_x,
            min_y,
            scale,
            height: span_y * scale + 2.0 * opts.margin,
            margin: opts.margin,
        }
    }

    fn x(&self, wx: f64) -> f64 {
        self.margin + (wx - self.min_x) * self.scale
    }

    /// Screen y grows downward; world y grows upward.
    fn y(&self, wy: f64) -> f64 {
        self.height - self.margin - (wy - self.min_y) * self.scale
    }
}

fn polyline(out: &mut String, pts: impl Iterator<Item = (f64, f64)>, style: &str) {
    let mut first = true;
    let mut attr = String::new();
    for (x, y) in pts {
        if !first {
            attr.push(' ');
        }
        first = false;
        let _ = write!(attr, "{},{}", fmt3(x), fmt3(y));
    }
    let _ = writeln!(out, "<polyline points=\"{}\" {}/>", attr, style);
}

/// Top-down view: print path, obstacles with their keep-out look, and the
/// planned base trajectory with a yaw tick at every stage.
pub fn render_plan_view(
    print_path: &[[f64; 3]],
    events: &[Event],
    obstacles: &[Obstacle],
    opts: &RenderOptions,
) -> String {
    let mut b = Bounds::empty();
    for v in print_path {
        b.grow(v[0], v[1]);
    }
    for e in events {
        b.grow(e.x, e.y);
    }
    for ob in obstacles {
        match *ob {
            Obstacle::Disc { center, radius } => {
                b.grow(center.0 - radius, center.1 - radius);
                b.grow(center.0 + radius, center.1 + radius);
            }
            Obstacle::Rect { min, max } => {
                b.grow(min.0, min.1);
                b.grow(max.0, max.1);
            }
        }
    }
    if !b.min_x.is_finite() {
        b.grow(0.0, 0.0);
    }
    // A little breathing room around the data.
    let pad_x = 0.05 * (b.max_x - b.min_x).max(1e-3);
    let pad_y = 0.05 * (b.max_y - b.min_y).max(1e-3);
    let frame = Frame::fit(
        b.min_x - pad_x,
        b.min_y - pad_y,
        b.max_x + pad_x,
        b.max_y + pad_y,
        opts,
    );

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\">",
        fmt3(opts.width),
        fmt3(frame.height),
        fmt3(opts.width),
        fmt3(frame.height)
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>",
        fmt3(opts.width),
        fmt3(frame.height)
    );

    for ob in obstacles {
        match *ob {
            Obstacle::Disc { center, radius } => {
                let _ = writeln!(
                    out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#f3c6c6\" stroke=\"#a33\"/>",
                    fmt3(frame.x(center.0)),
                    fmt3(frame.y(center.1)),
                    fmt3(radius * frame.scale)
                );
            }
            Obstacle::Rect { min, max } => {
                let _ = writeln!(
                    out,
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#f3c6c6\" stroke=\"#a33\"/>",
                    fmt3(frame.x(min.0)),
                    fmt3(frame.y(max.1)),
                    fmt3((max.0 - min.0) * frame.scale),
                    fmt3((max.1 - min.1) * frame.scale)
                );
            }
        }
    }

    if print_path.len() > 1 {
        polyline(
            &mut out,
            print_path.iter().map(|v| (frame.x(v[0]), frame.y(v[1]))),
            "fill=\"none\" stroke=\"#888\" stroke-width=\"1.5\"",
        );
    }
    if events.len() > 1 {
        polyline(
            &mut out,
            events.iter().map(|e| (frame.x(e.x), frame.y(e.y))),
            "fill=\"none\" stroke=\"#1560bd\" stroke-width=\"2\"",
        );
    }
    for e in events {
        let (sx, sy) = (frame.x(e.x), frame.y(e.y));
        let (s, c) = e.phi.sin_cos();
        let tx = frame.x(e.x + opts.yaw_tick * c);
        let ty = frame.y(e.y + opts.yaw_tick * s);
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"#1560bd\"/>",
            fmt3(sx),
            fmt3(sy)
        );
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#1560bd\" stroke-width=\"1\"/>",
            fmt3(sx),
            fmt3(sy),
            fmt3(tx),
            fmt3(ty)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Three stacked time strips: base x, base y, and yaw against time.
pub fn render_profiles(events: &[Event], spec: &GridSpec, opts: &RenderOptions) -> String {
    let strip_h = 140.0;
    let gap = 20.0;
    let height = 3.0 * strip_h + 2.0 * gap + 2.0 * opts.margin;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\">",
        fmt3(opts.width),
        fmt3(height),
        fmt3(opts.width),
        fmt3(height)
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>",
        fmt3(opts.width),
        fmt3(height)
    );
    let t_max = events.last().map_or(spec.dt(), |e| e.t).max(spec.dt());
    let plot_w = opts.width - 2.0 * opts.margin;
    let series: [(&str, fn(&Event) -> f64); 3] = [
        ("x [m]", |e| e.x),
        ("y [m]", |e| e.y),
        ("yaw [rad]", |e| e.phi),
    ];
    for (k, (label, f)) in series.iter().enumerate() {
        let top = opts.margin + k as f64 * (strip_h + gap);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for e in events {
            let v = f(e);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            lo = 0.0;
            hi = 0.0;
        }
        let span = (hi - lo).max(1e-3);
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#ccc\"/>",
            fmt3(opts.margin),
            fmt3(top),
            fmt3(plot_w),
            fmt3(strip_h)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">{}</text>",
            fmt3(opts.margin + 4.0),
            fmt3(top + 14.0),
            label
        );
        if events.len() > 1 {
            polyline(
                &mut out,
                events.iter().map(|e| {
                    (
                        opts.margin + e.t / t_max * plot_w,
                        top + strip_h - (f(e) - lo) / span * (strip_h - 20.0) - 10.0,
                    )
                }),
                "fill=\"none\" stroke=\"#1560bd\" stroke-width=\"1.5\"",
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

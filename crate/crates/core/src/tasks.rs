//! Print-path generators and the plain-text path file format.
//!
//! A task is a 3D polyline the nozzle must traverse at constant speed. Layered
//! tasks stack a closed outline at increasing heights, joined by a short
//! vertical seam at the start vertex so the whole task stays one continuous
//! polyline.

use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("line length must be positive (got {0})")]
    BadLength(f64),
    #[error("layer count must be at least 1")]
    NoLayers,
    #[error("layer height must be positive (got {0})")]
    BadLayerHeight(f64),
    #[error("outline must be closed (first and last vertex differ by {0} m)")]
    OpenOutline(f64),
    #[error("outline needs at least 3 distinct vertices")]
    DegenerateOutline,
    #[error("wall thickness {wall} does not fit a {width} x {height} outline")]
    BadWall { wall: f64, width: f64, height: f64 },
    #[error("line {line}: {what}")]
    Parse { line: usize, what: String },
    #[error("missing or wrong header (expected \"# path v1\", found {found:?})")]
    BadHeader { found: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Total 3D arc length of a polyline.
pub fn path_length(path: &[[f64; 3]]) -> f64 {
    path.windows(2)
        .map(|w| {
            let d = [w[1][0] - w[0][0], w[1][1] - w[0][1], w[1][2] - w[0][2]];
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        })
        .sum()
}

/// Perimeter of a 2D outline.
pub fn outline_length(outline: &[[f64; 2]]) -> f64 {
    outline
        .windows(2)
        .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
        .sum()
}

/// Straight seam line: `(0,0,h)` to `(length,0,h)`.
pub fn gen_line(length: f64, height: f64) -> Result<Vec<[f64; 3]>, TaskError> {
    if !(length.is_finite() && length > 0.0) {
        return Err(TaskError::BadLength(length));
    }
    Ok(vec![[0.0, 0.0, height], [length, 0.0, height]])
}

fn check_closed(outline: &[[f64; 2]]) -> Result<(), TaskError> {
    if outline.len() < 4 {
        return Err(TaskError::DegenerateOutline);
    }
    let a = outline[0];
    let b = outline[outline.len() - 1];
    let gap = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    if gap > 1e-9 {
        return Err(TaskError::OpenOutline(gap));
    }
    Ok(())
}

/// Stacks a closed outline `layers` times; layer `k` prints at height
/// `(k+1) * layer_height`, and consecutive layers are joined by a vertical
/// seam segment at the outline's start vertex. The nominal task length is
/// `layers * outline length` (seam climbs excluded).
pub fn gen_layers(
    outline: &[[f64; 2]],
    layers: usize,
    layer_height: f64,
) -> Result<Vec<[f64; 3]>, TaskError> {
    if layers == 0 {
        return Err(TaskError::NoLayers);
    }
    if !(layer_height.is_finite() && layer_height > 0.0) {
        return Err(TaskError::BadLayerHeight(layer_height));
    }
    check_closed(outline)?;
    let mut path = Vec::with_capacity(outline.len() * layers + layers);
    for k in 0..layers {
        let z = (k + 1) as f64 * layer_height;
        if k > 0 {
            // Seam climb: same xy as the outline start, new height.
            let v = outline[0];
            path.push([v[0], v[1], z]);
        }
        for (j, v) in outline.iter().enumerate() {
            if k > 0 && j == 0 {
                continue; // already pushed as the seam end
            }
            path.push([v[0], v[1], z]);
        }
    }
    Ok(path)
}

/// Axis-aligned closed square outline with corner at the origin.
pub fn gen_square(side: f64) -> Result<Vec<[f64; 2]>, TaskError> {
    if !(side.is_finite() && side > 0.0) {
        return Err(TaskError::BadLength(side));
    }
    Ok(vec![
        [0.0, 0.0],
        [side, 0.0],
        [side, side],
        [0.0, side],
        [0.0, 0.0],
    ])
}

/// Closed double-wall "U" outline: an open-top rectangle of outer size
/// `width x height` with wall thickness `wall`.
/// Perimeter works out to `2*width + 4*height - 2*wall`.
pub fn gen_u_outline(width: f64, height: f64, wall: f64) -> Result<Vec<[f64; 2]>, TaskError> {
    if !(wall.is_finite() && wall > 0.0 && 2.0 * wall < width && wall < height) {
        return Err(TaskError::BadWall {
            wall,
            width,
            height,
        });
    }
    Ok(vec![
        [0.0, height],
        [0.0, 0.0],
        [width, 0.0],
        [width, height],
        [width - wall, height],
        [width - wall, wall],
        [wall, wall],
        [wall, height],
        [0.0, height],
    ])
}

/// Default U outline, 1.285 x 0.5 m with a 0.3 m wall: perimeter 3.97 m.
///
/// The cavity (0.685 m wide, 0.2 m deep) is deliberately wide and shallow:
/// the base keeps a 0.45 m standoff from printed material, so a narrow deep
/// slot could not be served over its rim by an arm of this length.
pub fn u_outline_default() -> Vec<[f64; 2]> {
    gen_u_outline(1.285, 0.5, 0.3).expect("default U outline parameters are valid")
}

/// Rectilinear benchmark outline standing in for a three-letter print:
/// a 4.0 x 0.845 m rectangle with four square notches cut into the top edge,
/// sized so the per-layer path length is 11.29 m. As with the U outline, the
/// notches are wide and shallow so the base can serve them over the rim.
pub fn gen_ntu_standin() -> Vec<[f64; 2]> {
    let (w, h) = (4.0, 0.845);
    let depth = 0.2; // 2 * (w + h) + 8 * depth = 11.29
    let notches = [(3.0, 3.7), (2.1, 2.8), (1.2, 1.9), (0.3, 1.0)];
    let mut v = vec![[0.0, 0.0], [w, 0.0], [w, h]];
    for &(a, b) in &notches {
        v.push([b, h]);
        v.push([b, h - depth]);
        v.push([a, h - depth]);
        v.push([a, h]);
    }
    v.push([0.0, h]);
    v.push([0.0, 0.0]);
    v
}

const PATH_HEADER: &str = "# path v1";

/// Serializes a path; floats use the shortest representation that parses back
/// to the identical value, so save/load round-trips are bit-exact.
pub fn path_to_text(path: &[[f64; 3]]) -> String {
    let mut out = String::from(PATH_HEADER);
    out.push('\n');
    for v in path {
        out.push_str(&format!("{} {} {}\n", v[0], v[1], v[2]));
    }
    out
}

/// Parses the plain-text path format: a `# path v1` header, then one `x y z`
/// vertex per line; blank lines and `#` comments are skipped.
pub fn parse_path_text(text: &str) -> Result<Vec<[f64; 3]>, TaskError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == PATH_HEADER => {}
        other => {
            return Err(TaskError::BadHeader {
                found: other.map(|(_, s)| s.to_string()).unwrap_or_default(),
            })
        }
    }
    let mut path = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let mut fields = s.split_whitespace();
        let mut v: [f64; 3] = [0.0; 3];
        for (slot, name) in v.iter_mut().zip(["x", "y", "z"]) {
            let field = fields.next().ok_or_else(|| TaskError::Parse {
                line,
                what: format!("missing {name} coordinate"),
            })?;
            *slot = field.parse().map_err(|_| TaskError::Parse {
                line,
                what: format!("bad {name} value {field:?}"),
            })?;
            if !slot.is_finite() {
                return Err(TaskError::Parse {
                    line,
                    what: format!("non-finite {name} value {field:?}"),
                });
            }
        }
        if fields.next().is_some() {
            return Err(TaskError::Parse {
                line,
                what: "expected exactly three fields".into(),
            });
        }
        path.push(v);
    }
    Ok(path)
}

pub fn load_path_file(file: &Path) -> Result<Vec<[f64; 3]>, TaskError> {
    parse_path_text(&fs::read_to_string(file)?)
}

pub fn save_path_file(file: &Path, path: &[[f64; 3]]) -> Result<(), TaskError> {
    Ok(fs::write(file, path_to_text(path))?)
}

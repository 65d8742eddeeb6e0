//! Trajectory planners over the admissible spacetime.
//!
//! The main planner runs backward value iteration on the stage sets. The
//! survivor set of the final stage is the admissible set itself; walking
//! stages backwards, a pose survives when at least one survivor of the next
//! stage is inside its velocity cone, and it memoizes the cheapest such
//! continuation. Candidate continuations are found by scanning the next
//! stage's survivor list directly — admissible sets hug a thin annulus
//! around the nozzle, so the survivor list is far denser in useful
//! neighbours than the full control cone, and no time is spent probing
//! empty grid cells.
//!
//! Two reference planners ship alongside for cross-checking: a stage-layered
//! Dijkstra over the same grid, and an exhaustive search for tiny instances.
//!
//! All three report the forward-accumulated cost of their final event
//! sequence, so equal sequences give bitwise-equal costs. Every tie is
//! broken toward the lexicographically smallest grid key, making each
//! planner's output a pure function of its input.

use crate::grid::{step_cost, total_cost, Control, ControlSet, Event, GridKey, GridSpec};
use crate::world::AdmissibleSpacetime;
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Exhaustive-search guard: refuse above this many stage-key sequences.
pub const BRUTE_FORCE_CAP: f64 = 1e7;

/// Below this many poses in a stage the backward scan stays serial; the
/// result is identical either way, only the scheduling differs.
const PAR_THRESHOLD: usize = 256;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("no feasible trajectory: no pose of stage {stage} can continue to the goal")]
    Infeasible { stage: usize },
    #[error(
        "exhaustive search refused: ~{sequences:.3e} pose sequences exceed the cap of {cap:.1e}"
    )]
    TooLarge { sequences: f64, cap: f64 },
}

/// A planned base trajectory plus search diagnostics.
#[derive(Debug, Clone)]
pub struct PlanResult {
    /// One event per stage, `0..=N`.
    pub events: Vec<Event>,
    /// Total cost, accumulated forward in stage order.
    pub cost: f64,
    /// Remaining cost from each stage to the end, by backward recurrence
    /// `g[i] = l[i] + g[i+1]` over the final event sequence; `g[N] = 0`.
    pub cost_to_go: Vec<f64>,
    /// Candidate-pair (or edge) examinations performed by the search.
    pub relaxations: u64,
    /// Per-stage node counts retained by the search: backward survivors for
    /// the value iteration, settled nodes for Dijkstra, expanded prefixes
    /// for the exhaustive search.
    pub survivors: Vec<usize>,
}

fn finish(events: Vec<Event>, spec: &GridSpec, relaxations: u64, survivors: Vec<usize>) -> PlanResult {
    let cost = total_cost(&events, spec).expect("planned steps are stage-consecutive and admissible");
    let n = events.len();
    let mut cost_to_go = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        let c = events[i].key.delta_to(events[i + 1].key, spec.n_phi());
        cost_to_go[i] = step_cost(c, spec) + cost_to_go[i + 1];
    }
    PlanResult {
        events,
        cost,
        cost_to_go,
        relaxations,
        survivors,
    }
}

/// Separable admissibility tables so the hot loop never repeats float math.
/// Planar and yaw cone tests factor: the lookup reproduces
/// [`GridSpec::admits`] exactly.
struct ConeTables {
    bx: i32,
    by: i32,
    bphi: i32,
    /// xy_ok[(kx + bx) * (2*by + 1) + (ky + by)]
    xy_ok: Vec<bool>,
    /// Minimal yaw representative of `jphi_to - jphi_from`, indexed by
    /// `diff + n_phi - 1`.
    kmin: Vec<i32>,
}

impl ConeTables {
    fn build(spec: &GridSpec) -> ConeTables {
        // Largest admissible single-axis steps, probed through `admits` so
        // boundary rounding matches the cone test bit for bit.
        let probe = |make: fn(i32) -> Control| {
            let mut b = 0;
            while spec.admits(make(b + 1)) {
                b += 1;
            }
            b
        };
        let bx = probe(|k| Control::new(k, 0, 0));
        let by = probe(|k| Control::new(0, k, 0));
        let bphi = probe(|k| Control::new(0, 0, k));
        let wy = (2 * by + 1) as usize;
        let mut xy_ok = vec![false; (2 * bx + 1) as usize * wy];
        for kx in -bx..=bx {
            for ky in -by..=by {
                xy_ok[((kx + bx) as usize) * wy + (ky + by) as usize] =
                    spec.admits(Control::new(kx, ky, 0));
            }
        }
        let n_phi = spec.n_phi();
        let mut kmin = Vec::with_capacity((2 * n_phi - 1) as usize);
        for diff in -(n_phi - 1)..=(n_phi - 1) {
            let dj = diff.rem_euclid(n_phi);
            kmin.push(if 2 * dj > n_phi { dj - n_phi } else { dj });
        }
        ConeTables {
            bx,
            by,
            bphi,
            xy_ok,
            kmin,
        }
    }

    #[inline]
    fn xy(&self, kx: i32, ky: i32) -> bool {
        self.xy_ok[((kx + self.bx) as usize) * (2 * self.by + 1) as usize + (ky + self.by) as usize]
    }
}

#[derive(Clone, Copy)]
struct Node {
    key: GridKey,
    /// Memoized cost-to-go through the chosen continuation.
    g: f64,
    /// Index into the next stage's survivor list (unused on the last stage).
    next: u32,
}

/// Backward value iteration with survivor-list scanning.
pub fn mobocontp(aspace: &AdmissibleSpacetime) -> Result<PlanResult, PlanError> {
    let spec = aspace.spec();
    let stages = aspace.stages();
    let n = aspace.n_stages();
    let cones = ConeTables::build(spec);

    let mut layers: Vec<Vec<Node>> = vec![Vec::new(); n + 1];
    layers[n] = stages[n]
        .keys()
        .iter()
        .map(|&key| Node {
            key,
            g: 0.0,
            next: u32::MAX,
        })
        .collect();
    let mut relaxations = 0u64;

    for i in (0..n).rev() {
        let (head, tail) = layers.split_at_mut(i + 1);
        let frontier: &[Node] = &tail[0];
        let keys = stages[i].keys();
        relaxations += keys.len() as u64 * frontier.len() as u64;

        let scan = |&key: &GridKey| -> Option<Node> {
            let mut best_g = f64::INFINITY;
            let mut best_next = u32::MAX;
            for (j, f) in frontier.iter().enumerate() {
                let kx = f.key.jx - key.jx;
                if kx < -cones.bx || kx > cones.bx {
                    continue;
                }
                let ky = f.key.jy - key.jy;
                if ky < -cones.by || ky > cones.by {
                    continue;
                }
                let kphi =
                    cones.kmin[(f.key.jphi - key.jphi + spec.n_phi() - 1) as usize];
                if kphi < -cones.bphi || kphi > cones.bphi || !cones.xy(kx, ky) {
                    continue;
                }
                let g = f.g + step_cost(Control::new(kx, ky, kphi), spec);
                if g < best_g {
                    best_g = g;
                    best_next = j as u32;
                }
            }
            (best_next != u32::MAX).then(|| Node {
                key,
                g: best_g,
                next: best_next,
            })
        };

        head[i] = if keys.len() >= PAR_THRESHOLD {
            keys.par_iter().filter_map(scan).collect()
        } else {
            keys.iter().filter_map(scan).collect()
        };
        if head[i].is_empty() {
            return Err(PlanError::Infeasible { stage: i });
        }
    }

    // Cheapest start; ties go to the lexicographically smallest key because
    // survivor lists are in key order and only strict improvements replace.
    let mut start = 0usize;
    for (idx, node) in layers[0].iter().enumerate() {
        if node.g < layers[0][start].g {
            start = idx;
        }
    }
    let mut events = Vec::with_capacity(n + 1);
    let mut at = &layers[0][start];
    events.push(spec.event(0, at.key));
    for i in 1..=n {
        at = &layers[i][at.next as usize];
        events.push(spec.event(i, at.key));
    }
    let survivors = layers.iter().map(|l| l.len()).collect();
    Ok(finish(events, spec, relaxations, survivors))
}

#[derive(PartialEq)]
struct HeapItem {
    d: f64,
    stage: u32,
    idx: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap and we want the smallest
        // (distance, stage, index) on top.
        other
            .d
            .total_cmp(&self.d)
            .then(other.stage.cmp(&self.stage))
            .then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Stage-layered Dijkstra over the same grid and cost, as a baseline.
///
/// Nodes are (stage, pose); edges apply one admissible control forward. All
/// first-stage poses start at distance zero; the first settled final-stage
/// node is optimal.
pub fn dijkstra_baseline(aspace: &AdmissibleSpacetime) -> Result<PlanResult, PlanError> {
    let spec = aspace.spec();
    let stages = aspace.stages();
    let n = aspace.n_stages();
    let controls = ControlSet::build(spec);

    let mut dist: Vec<Vec<f64>> = stages
        .iter()
        .map(|s| vec![f64::INFINITY; s.len()])
        .collect();
    let mut parent: Vec<Vec<u32>> = stages.iter().map(|s| vec![u32::MAX; s.len()]).collect();
    let mut settled: Vec<Vec<bool>> = stages.iter().map(|s| vec![false; s.len()]).collect();
    let mut settled_count = vec![0usize; n + 1];
    let mut heap = BinaryHeap::new();
    for idx in 0..stages[0].len() {
        dist[0][idx] = 0.0;
        heap.push(HeapItem {
            d: 0.0,
            stage: 0,
            idx: idx as u32,
        });
    }

    let mut relaxations = 0u64;
    let mut deepest = 0usize;
    while let Some(HeapItem { d, stage, idx }) = heap.pop() {
        let (i, idx) = (stage as usize, idx as usize);
        if settled[i][idx] {
            continue;
        }
        settled[i][idx] = true;
        settled_count[i] += 1;
        deepest = deepest.max(i);
        if i == n {
            // Min-heap order also breaks distance ties toward the smaller
            // key index, i.e. the lexicographically smallest goal pose.
            let mut rev = Vec::with_capacity(n + 1);
            let (mut si, mut sj) = (i, idx);
            loop {
                rev.push(spec.event(si, stages[si].keys()[sj]));
                if si == 0 {
                    break;
                }
                sj = parent[si][sj] as usize;
                si -= 1;
            }
            rev.reverse();
            return Ok(finish(rev, spec, relaxations, settled_count));
        }
        let key = stages[i].keys()[idx];
        for c in controls.iter() {
            relaxations += 1;
            let to = key.shifted(c, spec.n_phi());
            let Ok(j) = stages[i + 1].keys().binary_search(&to) else {
                continue;
            };
            let nd = d + step_cost(c, spec);
            if nd < dist[i + 1][j] {
                dist[i + 1][j] = nd;
                parent[i + 1][j] = idx as u32;
                heap.push(HeapItem {
                    d: nd,
                    stage: (i + 1) as u32,
                    idx: j as u32,
                });
            }
        }
    }
    Err(PlanError::Infeasible { stage: deepest + 1 })
}

/// Exhaustive depth-first search over every pose sequence, for tiny
/// instances only. The first minimal sequence in lexicographic order wins.
pub fn brute_force_plan(aspace: &AdmissibleSpacetime) -> Result<PlanResult, PlanError> {
    let spec = aspace.spec();
    let stages = aspace.stages();
    let n = aspace.n_stages();
    let sequences: f64 = stages.iter().map(|s| s.len() as f64).product();
    if sequences > BRUTE_FORCE_CAP {
        return Err(PlanError::TooLarge {
            sequences,
            cap: BRUTE_FORCE_CAP,
        });
    }

    struct Dfs<'a> {
        spec: &'a GridSpec,
        stages: &'a [crate::world::StageSet],
        n: usize,
        best: Option<(f64, Vec<GridKey>)>,
        path: Vec<GridKey>,
        relaxations: u64,
        expanded: Vec<usize>,
        deepest: usize,
    }

    impl Dfs<'_> {
        fn go(&mut self, i: usize, cost: f64) {
            self.deepest = self.deepest.max(i);
            if i == self.n {
                // Strict improvement only: the earliest minimal sequence in
                // depth-first (lexicographic) order is retained.
                if self.best.as_ref().map_or(true, |(b, _)| cost < *b) {
                    self.best = Some((cost, self.path.clone()));
                }
                return;
            }
            let from = *self.path.last().unwrap();
            for &to in self.stages[i + 1].keys() {
                self.relaxations += 1;
                let c = from.delta_to(to, self.spec.n_phi());
                if !self.spec.admits(c) {
                    continue;
                }
                let next_cost = cost + step_cost(c, self.spec);
                if let Some((b, _)) = &self.best {
                    if next_cost >= *b {
                        continue;
                    }
                }
                self.expanded[i + 1] += 1;
                self.path.push(to);
                self.go(i + 1, next_cost);
                self.path.pop();
            }
        }
    }

    let mut dfs = Dfs {
        spec,
        stages,
        n,
        best: None,
        path: Vec::with_capacity(n + 1),
        relaxations: 0,
        expanded: vec![0usize; n + 1],
        deepest: 0,
    };
    for &start in stages[0].keys() {
        dfs.expanded[0] += 1;
        dfs.path.push(start);
        dfs.go(0, 0.0);
        dfs.path.pop();
    }
    match dfs.best.take() {
        Some((_, keys)) => {
            let events = keys
                .iter()
                .enumerate()
                .map(|(i, &k)| spec.event(i, k))
                .collect();
            Ok(finish(events, spec, dfs.relaxations, dfs.expanded))
        }
        None => Err(PlanError::Infeasible {
            stage: (dfs.deepest + 1).min(n),
        }),
    }
}

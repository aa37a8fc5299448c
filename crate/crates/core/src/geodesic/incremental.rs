//! Re-evaluation of a passage time after the contents of one box change.
//!
//! A geodesic is stored with exact forward labels from `a` and backward
//! labels `B` from `b` (capped at the passage time `T`). When a box is replaced:
//!
//! * if the old geodesic keeps all its vertices, any new path must pass
//!   through an added point, so `min_p A(p) + min_p B(p)` (cheapest approach
//!   to an added point from `a`, and from an added point to `b`) bounds the
//!   new optimum from below; when that bound reaches `T` the answer is `T`;
//! * otherwise A* is rerun on the modified graph with `max(0, B + K)` as
//!   heuristic, where `K <= 0` is the largest drop a detour through an added
//!   point can cause. The heuristic is admissible but not consistent, so
//!   closed vertices may be reopened.

use crate::error::{Error, Result};
use crate::geodesic::graph::{Graph, Tag};
use crate::geodesic::view::{self, EndpointMode, EnvironmentView, PathResult};
use crate::geometry::{distance, BoxIndex};
use crate::point_process::Environment;
use crate::rng::MasterSeed;

/// A geodesic of an unmodified inserted-endpoint view, kept for cheap one-box updates.
#[derive(Clone, Debug)]
pub struct LabeledGeodesic<'a> {
    env: &'a Environment,
    graph: Graph,
    ids: Vec<usize>,
    path: PathResult,
    time: f64,
    forward: Vec<f64>,
    backward: Vec<f64>,
    /// First vertex id of each window box; the endpoints follow the last box.
    box_start: Vec<usize>,
    /// Minimum backward label per spatial index cell.
    cell_floor: Vec<f64>,
}

fn capped(labels: &super::graph::Labels, cap: f64) -> Vec<f64> {
    labels
        .dist
        .iter()
        .zip(&labels.settled)
        .map(|(&d, &s)| if s && d < cap { d } else { cap })
        .collect()
}

impl<'a> LabeledGeodesic<'a> {
    pub fn compute(view: &EnvironmentView<'a>, a: &[f64], b: &[f64]) -> Result<Self> {
        if !view.is_plain() || view.endpoints != EndpointMode::Insert {
            return Err(Error::InvalidParameter(
                "incremental geodesics need inserted endpoints and no box modification".into(),
            ));
        }
        if a == b {
            return Err(Error::InvalidParameter("incremental geodesics need distinct endpoints".into()));
        }
        let graph = view::build_graph(view, a, b)?;
        let (ids, fwd) = graph.shortest(None, None).ok_or(Error::Unreachable)?;
        let time = fwd.dist[graph.target];
        let bwd = graph.search(graph.target, graph.source, f64::INFINITY, time, None);
        let path = view::to_path_result(view.base, &view.cost, graph.expand(&ids));
        let slots = view.base.window().num_boxes();
        let mut box_start = vec![0usize; slots + 1];
        for tag in &graph.tags {
            if let Tag::Point { slot, .. } = tag {
                box_start[*slot as usize + 1] += 1;
            }
        }
        for s in 0..slots {
            box_start[s + 1] += box_start[s];
        }
        let backward = capped(&bwd, time);
        Ok(Self {
            env: view.base,
            forward: capped(&fwd, time),
            cell_floor: graph.cell_minima(&backward),
            backward,
            graph,
            ids,
            path,
            time,
            box_start,
        })
    }

    pub fn passage_time(&self) -> f64 {
        self.time
    }

    pub fn path(&self) -> &PathResult {
        &self.path
    }

    /// Cheapest approach to `p` through an old vertex, using `labels`; at least `min(T, true value)`.
    fn approach(&self, labels: &[f64], p: &[f64]) -> f64 {
        let r = self.graph.cost.inverse(self.time) * (1.0 + 1e-9);
        let lo: Vec<f64> = p.iter().map(|x| x - r).collect();
        let hi: Vec<f64> = p.iter().map(|x| x + r).collect();
        let mut best = self.time;
        self.graph.index.for_each_in(&lo, &hi, |u| {
            if labels[u] < best {
                let c = labels[u] + self.graph.cost.cost(distance(self.graph.point(u), p));
                best = best.min(c);
            }
        });
        best
    }

    /// Non-positive `K` such that `B(v) + K` still bounds the remaining cost of
    /// every old vertex `v` once `added` exist, where `r_min` bounds the
    /// remaining cost from any added point.
    ///
    /// A path from `v` through an added point `w` first reaches `w` from some
    /// old `u`, so it costs at least `B(v) - B(u) + c(u, w) + r_min`.
    fn detour_shift(&self, added: &[&[f64]], r_min: f64) -> f64 {
        let r = self.graph.cost.inverse(self.time) * (1.0 + 1e-9);
        let mut k = 0.0f64;
        for w in added {
            let lo: Vec<f64> = w.iter().map(|x| x - r).collect();
            let hi: Vec<f64> = w.iter().map(|x| x + r).collect();
            self.graph.index.for_each_in(&lo, &hi, |u| {
                let c = self.graph.cost.cost(distance(self.graph.point(u), w));
                k = k.min(c + r_min - self.backward[u]);
            });
        }
        k
    }

    /// Passage time after box `bx` is made to hold exactly `new_points` (flattened).
    pub fn time_with_box_points(&self, bx: &BoxIndex, new_points: &[f64]) -> Result<f64> {
        let d = self.graph.dim;
        let slot = self.env.window().linear_index(bx).ok_or_else(|| Error::BoxOutsideWindow(bx.clone()))?;
        if !new_points.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch { expected: d, got: new_points.len() % d });
        }
        let (start, end) = (self.box_start[slot], self.box_start[slot + 1]);
        let old: Vec<&[f64]> = (start..end).map(|v| self.graph.point(v)).collect();
        let new: Vec<&[f64]> = new_points.chunks_exact(d).collect();
        let removed: Vec<usize> = (start..end).filter(|&v| !new.contains(&self.graph.point(v))).collect();
        let added: Vec<&[f64]> = new.iter().copied().filter(|p| !old.contains(p)).collect();

        let uses_removed = self.ids.iter().any(|v| removed.contains(v));
        let r_min = added.iter().map(|p| self.approach(&self.backward, p)).fold(self.time, f64::min);
        let upper = if uses_removed {
            let kept: Vec<usize> = self.ids.iter().copied().filter(|v| !removed.contains(v)).collect();
            self.graph.path_cost(&kept)
        } else {
            if added.is_empty() {
                return Ok(self.time);
            }
            let a_min = added.iter().map(|p| self.approach(&self.forward, p)).fold(f64::INFINITY, f64::min);
            if a_min + r_min >= self.time {
                return Ok(self.time);
            }
            self.time
        };
        let shift = self.detour_shift(&added, r_min);

        let added_flat: Vec<f64> = added.iter().flat_map(|p| p.iter().copied()).collect();
        let backward = &self.backward;
        let base = self.graph.num_nodes();
        let h = |v: usize| if v < base { (backward[v] + shift).max(0.0) } else { r_min };
        let t = self.graph.astar_with_changes(&removed, &added_flat, upper, h, &self.cell_floor, shift);
        if t.is_finite() {
            Ok(t)
        } else {
            Err(Error::Unreachable)
        }
    }

    /// Passage time after resampling box `bx` with the given tag (see `Environment::resample_box`).
    pub fn time_with_resampled_box(&self, bx: &BoxIndex, seed: MasterSeed, tag: u64) -> Result<f64> {
        let tape = self.env.resampled_tape(bx, seed, tag)?;
        let pts = self.env.points_with_tape(bx, tape);
        self.time_with_box_points(bx, &pts)
    }

    /// Passage time after setting bit `j` of the box tape to `value`.
    pub fn time_with_bit(&self, bx: &BoxIndex, j: usize, value: bool) -> Result<f64> {
        let tape = self.env.tape(bx)?;
        if j > 0 && tape.bit(j) == value {
            return Ok(self.time);
        }
        let tape = tape.with_bit(j, value)?;
        let pts = self.env.points_with_tape(bx, tape);
        self.time_with_box_points(bx, &pts)
    }
}

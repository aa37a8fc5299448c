//! Passage times and geodesics over a point environment.
//!
//! Every query builds the complete graph on the view's usable points (free
//! box contracted to one vertex) and runs a label-setting search that only
//! enumerates edges short enough to beat the best known path. Costs within
//! `1e-12` relative count as tied; ties go to the lexicographically smaller
//! vertex sequence (compared coordinate-wise from the source, the free box
//! represented by its center).

mod brute;
mod graph;
mod incremental;
mod stats;
mod view;

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::{distance, BoxIndex, PhiParams};
use crate::point_process::{lex_cmp, Environment, ThinningSpec};

pub use brute::BRUTE_FORCE_LIMIT;
pub use incremental::LabeledGeodesic;
pub use stats::{geodesic_stats, BoxVisit, GeodesicStats};
pub use view::{EndpointMode, EnvironmentView, PathResult, VertexRef};

/// Closest process point to `x`; equidistant points resolve to the lexicographically smaller.
pub fn nearest_point(env: &Environment, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != env.dim() {
        return Err(Error::DimensionMismatch { expected: env.dim(), got: x.len() });
    }
    let d = env.dim();
    let mut best: Option<(f64, &[f64])> = None;
    for slot in 0..env.window().num_boxes() {
        for q in env.state_at(slot).points.chunks_exact(d) {
            let s: f64 = x.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            let replace = match best {
                None => true,
                Some((bs, bq)) => s < bs || (s == bs && lex_cmp(q, bq) == Ordering::Less),
            };
            if replace {
                best = Some((s, q));
            }
        }
    }
    best.map(|(_, q)| q.to_vec()).ok_or(Error::EmptyEnvironment)
}

/// Minimal-cost path from `a` to `b` in the view.
pub fn passage_time(view: &EnvironmentView, a: &[f64], b: &[f64]) -> Result<PathResult> {
    let g = view::build_graph(view, a, b)?;
    let (ids, _) = g.shortest(None, None).ok_or(Error::Unreachable)?;
    Ok(view::to_path_result(view.base, &view.cost, g.expand(&ids)))
}

/// Exhaustive minimum over all simple paths; refuses more than [`BRUTE_FORCE_LIMIT`] usable points.
pub fn brute_force_passage_time(view: &EnvironmentView, a: &[f64], b: &[f64]) -> Result<PathResult> {
    let g = view::build_graph(view, a, b)?;
    let ids = brute::brute_force(&g)?;
    Ok(view::to_path_result(view.base, &view.cost, g.expand(&ids)))
}

/// Treatment of one box in [`modified_passage_time`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxMode {
    /// Remove the box's points (`T''_{B,0}`).
    Empty,
    /// Make transit through the box free (`T''_{B,inf}`).
    Free,
}

/// `T''(0, n e1)` over the thinned environment with one box emptied or made free.
pub fn modified_passage_time(
    env: &Environment,
    params: &PhiParams,
    spec: &ThinningSpec,
    bx: &BoxIndex,
    mode: BoxMode,
) -> Result<f64> {
    let thinned = env.thin(spec);
    let view = EnvironmentView::phi(&thinned, *params);
    let view = match mode {
        BoxMode::Empty => view.with_emptied_box(bx.clone()),
        BoxMode::Free => view.with_free_box(bx.clone()),
    };
    let a = vec![0.0; env.dim()];
    let mut b = a.clone();
    b[0] = params.n();
    Ok(passage_time(&view, &a, &b)?.passage_time)
}

/// Gradient of the path cost with respect to the `k`-th point of `bx`.
///
/// Zero when that point is not a path vertex.
pub fn grad_wrt_point(view: &EnvironmentView, path: &PathResult, bx: &BoxIndex, k: usize) -> Result<Vec<f64>> {
    let cost = view.cost;
    grad_wrt_point_with(view, path, bx, k, |t| cost.slope(t))
}

/// [`grad_wrt_point`] with the cost derivative supplied by the caller.
pub fn grad_wrt_point_with(
    view: &EnvironmentView,
    path: &PathResult,
    bx: &BoxIndex,
    k: usize,
    slope: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    let d = view.base.dim();
    let count = view.base.points_flat(bx)?.len() / d;
    if k >= count {
        return Err(Error::PointIndexOutOfRange { bx: bx.clone(), k, count });
    }
    let mut grad = vec![0.0; d];
    let target = VertexRef::Point { bx: bx.clone(), k };
    let Some(i) = path.refs.iter().position(|r| *r == target) else {
        return Ok(grad);
    };
    let grid = view.base.grid();
    let in_free = |p: &[f64]| view.free_box.as_ref().is_some_and(|fb| grid.box_of(p) == *fb);
    let p = &path.vertices[i];
    let neighbors = [i.checked_sub(1), (i + 1 < path.vertices.len()).then_some(i + 1)];
    for j in neighbors.into_iter().flatten() {
        let q = &path.vertices[j];
        let len = distance(p, q);
        if len == 0.0 || (in_free(p) && in_free(q)) {
            continue;
        }
        let s = slope(len);
        for a in 0..d {
            grad[a] += s * (p[a] - q[a]) / len;
        }
    }
    Ok(grad)
}

/// `#C >= ceil(|a - b| / sqrt(d))` holds for any path between `a` and `b`.
pub fn touched_lower_bound(a: &[f64], b: &[f64]) -> usize {
    (distance(a, b) / (a.len() as f64).sqrt()).ceil() as usize
}

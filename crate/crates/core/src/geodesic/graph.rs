//! Complete geometric graph on the usable points of a view, searched by a
//! label-setting algorithm that only enumerates edges able to beat an upper
//! bound on the optimum.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use smallvec::{smallvec, SmallVec};

use crate::geometry::{distance, CostModel};
use crate::point_process::lex_cmp;

/// Relative tolerance under which two path costs count as tied.
pub(crate) const TIE_TOL: f64 = 1e-12;
const NONE: u32 = u32::MAX;
/// Edge-length cap of the cheap first pass that seeds the upper bound.
const SEED_RADIUS: f64 = 2.5;
const CELL: f64 = 1.0;

pub(crate) fn near_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs())
}

/// Provenance of a graph vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Tag {
    /// `k`-th kept point of the window box with linear index `slot`.
    Point { slot: u32, k: u32 },
    /// 0 = a, 1 = b, 2.. = extra points.
    Endpoint(u32),
    /// Boundary point of an empty free box.
    Boundary,
}

/// Uniform bucket grid over a point set.
#[derive(Clone, Debug)]
pub(crate) struct SpatialIndex {
    dim: usize,
    origin: Vec<f64>,
    shape: Vec<usize>,
    stride: Vec<usize>,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl SpatialIndex {
    pub fn build(coords: &[f64], dim: usize) -> Self {
        let n = coords.len() / dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in coords.chunks_exact(dim) {
            for a in 0..dim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        if n == 0 {
            lo.fill(0.0);
            hi.fill(0.0);
        }
        let shape: Vec<usize> = (0..dim).map(|a| ((hi[a] - lo[a]) / CELL).floor() as usize + 1).collect();
        let mut stride = vec![1usize; dim];
        for a in (0..dim - 1).rev() {
            stride[a] = stride[a + 1] * shape[a + 1];
        }
        let cells = stride[0] * shape[0];
        let mut index = Self { dim, origin: lo, shape, stride, start: vec![0; cells + 1], items: vec![0; n] };
        let cell_ids: Vec<usize> = coords.chunks_exact(dim).map(|p| index.cell_of(p)).collect();
        for &c in &cell_ids {
            index.start[c + 1] += 1;
        }
        for c in 0..cells {
            index.start[c + 1] += index.start[c];
        }
        let mut fill = index.start.clone();
        for (i, &c) in cell_ids.iter().enumerate() {
            index.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        index
    }

    fn axis_cell(&self, a: usize, x: f64) -> i64 {
        ((x - self.origin[a]) / CELL).floor() as i64
    }

    fn cell_of(&self, p: &[f64]) -> usize {
        (0..self.dim)
            .map(|a| self.axis_cell(a, p[a]).clamp(0, self.shape[a] as i64 - 1) as usize * self.stride[a])
            .sum()
    }

    pub fn num_cells(&self) -> usize {
        self.start.len() - 1
    }

    pub fn cell_items(&self, c: usize) -> &[u32] {
        &self.items[self.start[c] as usize..self.start[c + 1] as usize]
    }

    /// Calls `f(cell, gap)` for every non-empty cell meeting the box `[lo, hi]`,
    /// where `gap` whole cells separate it from the cell of `p` along some axis.
    pub fn for_each_cell_in(&self, p: &[f64], lo: &[f64], hi: &[f64], mut f: impl FnMut(usize, usize)) {
        let d = self.dim;
        if d == 2 {
            let range = |a: usize| {
                let l = self.axis_cell(a, lo[a]).max(0);
                let h = self.axis_cell(a, hi[a]).min(self.shape[a] as i64 - 1);
                (l, h, self.axis_cell(a, p[a]))
            };
            let ((l0, h0, c0), (l1, h1, c1)) = (range(0), range(1));
            for i in l0..=h0 {
                let g0 = ((i - c0).abs() - 1).max(0) as usize;
                let row = i as usize * self.stride[0];
                for j in l1..=h1 {
                    let c = row + j as usize;
                    if self.start[c] != self.start[c + 1] {
                        f(c, g0.max(((j - c1).abs() - 1).max(0) as usize));
                    }
                }
            }
            return;
        }
        let mut from: SmallVec<[usize; 4]> = smallvec![0; d];
        let mut to: SmallVec<[usize; 4]> = smallvec![0; d];
        let mut home: SmallVec<[i64; 4]> = smallvec![0; d];
        for a in 0..d {
            let l = self.axis_cell(a, lo[a]).max(0);
            let h = self.axis_cell(a, hi[a]).min(self.shape[a] as i64 - 1);
            if l > h {
                return;
            }
            from[a] = l as usize;
            to[a] = h as usize;
            home[a] = self.axis_cell(a, p[a]);
        }
        let mut idx = from.clone();
        loop {
            let mut c = 0;
            let mut gap = 0;
            for a in 0..d {
                c += idx[a] * self.stride[a];
                gap = gap.max(((idx[a] as i64 - home[a]).abs() - 1).max(0) as usize);
            }
            if self.start[c] != self.start[c + 1] {
                f(c, gap);
            }
            let mut a = d;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] <= to[a] {
                    break;
                }
                idx[a] = from[a];
            }
        }
    }

    /// Calls `f` for every item whose cell meets the box `[lo, hi]`.
    pub fn for_each_in(&self, lo: &[f64], hi: &[f64], mut f: impl FnMut(usize)) {
        let d = self.dim;
        let mut from: SmallVec<[usize; 4]> = smallvec![0; d];
        let mut to: SmallVec<[usize; 4]> = smallvec![0; d];
        for a in 0..d {
            let l = self.axis_cell(a, lo[a]).max(0);
            let h = self.axis_cell(a, hi[a]).min(self.shape[a] as i64 - 1);
            if l > h {
                return;
            }
            from[a] = l as usize;
            to[a] = h as usize;
        }
        let last = d - 1;
        let mut idx = from.clone();
        loop {
            let base: usize = (0..last).map(|a| idx[a] * self.stride[a]).sum();
            let s = self.start[base + from[last]] as usize;
            let e = self.start[base + to[last] + 1] as usize;
            for &it in &self.items[s..e] {
                f(it as usize);
            }
            let mut a = last;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] <= to[a] {
                    break;
                }
                idx[a] = from[a];
            }
        }
    }
}

/// A free box contracted to one vertex.
#[derive(Clone, Debug)]
pub(crate) struct FreeNode {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub center: Vec<f64>,
    pub members: Vec<f64>,
    pub member_tags: Vec<Tag>,
}

impl FreeNode {
    fn clamp(&self, p: &[f64]) -> Vec<f64> {
        p.iter().enumerate().map(|(a, &x)| x.clamp(self.lo[a], self.hi[a])).collect()
    }

    pub fn num_members(&self, dim: usize) -> usize {
        self.members.len() / dim
    }
}

/// Concrete point standing for the supernode at one end of a path.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Anchor {
    pub point: Vec<f64>,
    pub tag: Tag,
}

pub(crate) enum Terminal {
    Vertex(usize),
    Super(Anchor),
}

pub(crate) struct Labels {
    pub dist: Vec<f64>,
    pub pred: Vec<u32>,
    pub settled: Vec<bool>,
}

#[derive(PartialEq)]
struct Entry {
    d: f64,
    v: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.d.total_cmp(&self.d).then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Path with its vertices expanded to concrete points.
pub(crate) struct Expanded {
    pub points: Vec<Vec<f64>>,
    pub tags: Vec<Tag>,
    /// `free[i]` marks the segment ending at vertex `i` as internal to the free box.
    pub free: Vec<bool>,
}

#[derive(Clone, Debug)]
pub(crate) struct Graph {
    pub dim: usize,
    pub cost: CostModel,
    pub coords: Vec<f64>,
    pub tags: Vec<Tag>,
    pub index: SpatialIndex,
    pub free: Option<FreeNode>,
    pub source: usize,
    pub target: usize,
    pub source_anchor: Option<Anchor>,
    pub target_anchor: Option<Anchor>,
    pub w_pruning: bool,
}

impl Graph {
    pub fn assemble(
        dim: usize,
        cost: CostModel,
        coords: Vec<f64>,
        tags: Vec<Tag>,
        free: Option<FreeNode>,
        source: Terminal,
        target: Terminal,
    ) -> Self {
        let index = SpatialIndex::build(&coords, dim);
        let sup = tags.len();
        let (source, source_anchor) = match source {
            Terminal::Vertex(v) => (v, None),
            Terminal::Super(a) => (sup, Some(a)),
        };
        let (target, target_anchor) = match target {
            Terminal::Vertex(v) => (v, None),
            Terminal::Super(a) => (sup, Some(a)),
        };
        Self {
            dim,
            cost,
            coords,
            tags,
            index,
            free,
            source,
            target,
            source_anchor,
            target_anchor,
            w_pruning: false,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.tags.len() + usize::from(self.free.is_some())
    }

    pub fn is_super(&self, v: usize) -> bool {
        v == self.tags.len()
    }

    pub fn point(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    /// Coordinates compared by the tie rule; the supernode uses its box center.
    pub fn key(&self, v: usize) -> &[f64] {
        match &self.free {
            Some(f) if self.is_super(v) => &f.center,
            _ => self.point(v),
        }
    }

    /// Cheapest connection of regular vertex `v` to the supernode and the member realizing it.
    pub fn super_link(&self, v: usize) -> (f64, Option<usize>) {
        let f = self.free.as_ref().expect("graph has a free box");
        let p = self.point(v);
        let m = f.num_members(self.dim);
        if m == 0 {
            let q = f.clamp(p);
            return (self.cost.cost(distance(p, &q)), None);
        }
        let mut best = (f64::INFINITY, 0usize);
        for i in 0..m {
            let q = &f.members[i * self.dim..(i + 1) * self.dim];
            let c = self.cost.cost(distance(p, q));
            let prev = &f.members[best.1 * self.dim..(best.1 + 1) * self.dim];
            if c < best.0 || (c == best.0 && lex_cmp(q, prev) == Ordering::Less) {
                best = (c, i);
            }
        }
        (best.0, Some(best.1))
    }

    pub fn edge_cost(&self, u: usize, v: usize) -> f64 {
        if self.is_super(u) {
            self.super_link(v).0
        } else if self.is_super(v) {
            self.super_link(u).0
        } else {
            self.cost.cost(distance(self.point(u), self.point(v)))
        }
    }

    fn chain(&self, mut v: usize, pred: &[u32]) -> Vec<usize> {
        let mut out = vec![v];
        while pred[v] != NONE {
            v = pred[v] as usize;
            out.push(v);
        }
        out.reverse();
        out
    }

    /// Lexicographic comparison of two vertex sequences by their keys.
    pub fn cmp_paths(&self, a: &[usize], b: &[usize]) -> Ordering {
        for (&x, &y) in a.iter().zip(b) {
            if x == y {
                continue;
            }
            match lex_cmp(self.key(x), self.key(y)) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        a.len().cmp(&b.len())
    }

    /// Whether some third vertex strictly improves the direct edge `u`-`v`.
    fn dominated(&self, u: usize, v: usize) -> bool {
        if self.is_super(u) || self.is_super(v) {
            return false;
        }
        let (pu, pv) = (self.point(u), self.point(v));
        let len = distance(pu, pv);
        let direct = self.cost.cost(len);
        // Any improving point lies within `len` of both ends.
        let lo: Vec<f64> = pu.iter().zip(pv).map(|(a, b)| a.max(*b) - len).collect();
        let hi: Vec<f64> = pu.iter().zip(pv).map(|(a, b)| a.min(*b) + len).collect();
        let mut found = false;
        self.index.for_each_in(&lo, &hi, |w| {
            if found || w == u || w == v {
                return;
            }
            let pw = self.point(w);
            if self.cost.cost(distance(pu, pw)) + self.cost.cost(distance(pw, pv)) < direct {
                found = true;
            }
        });
        found
    }

    fn neighbors(&self, u: usize, r: f64, out: &mut Vec<usize>, stamp: &mut [u32], epoch: u32) {
        let d = self.dim;
        let r2 = r * r;
        if !self.is_super(u) {
            let p = self.point(u);
            let lo: Vec<f64> = p.iter().map(|x| x - r).collect();
            let hi: Vec<f64> = p.iter().map(|x| x + r).collect();
            self.index.for_each_in(&lo, &hi, |v| {
                let q = self.point(v);
                let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                if s <= r2 {
                    out.push(v);
                }
            });
            if self.free.is_some() {
                out.push(self.tags.len());
            }
            return;
        }
        let f = self.free.as_ref().expect("supernode without free box");
        let m = f.num_members(d);
        if m == 0 {
            let lo: Vec<f64> = f.lo.iter().map(|x| x - r).collect();
            let hi: Vec<f64> = f.hi.iter().map(|x| x + r).collect();
            self.index.for_each_in(&lo, &hi, |v| {
                let q = self.point(v);
                if distance(q, &f.clamp(q)) <= r {
                    out.push(v);
                }
            });
            return;
        }
        for i in 0..m {
            let p = &f.members[i * d..(i + 1) * d];
            let lo: Vec<f64> = p.iter().map(|x| x - r).collect();
            let hi: Vec<f64> = p.iter().map(|x| x + r).collect();
            self.index.for_each_in(&lo, &hi, |v| {
                if stamp[v] == epoch {
                    return;
                }
                let q = self.point(v);
                let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                if s <= r2 {
                    stamp[v] = epoch;
                    out.push(v);
                }
            });
        }
    }

    /// Label-setting search from `source` until `target` settles.
    ///
    /// Edges longer than `radius_cap` are ignored. Relaxations whose label
    /// would exceed the smaller of `bound` and the current target label are
    /// skipped, as are those where `dist + floor[v]` does so (`floor` must be
    /// a lower bound on the remaining cost to the target).
    pub fn search(&self, source: usize, target: usize, radius_cap: f64, bound: f64, floor: Option<&[f64]>) -> Labels {
        let n = self.num_nodes();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![NONE; n];
        let mut settled = vec![false; n];
        let mut stamp = if self.free.is_some() { vec![0u32; n] } else { Vec::new() };
        let mut epoch = 0u32;
        let mut heap = BinaryHeap::new();
        let mut cand = Vec::new();
        dist[source] = 0.0;
        heap.push(Entry { d: 0.0, v: source as u32 });
        let limit = |dist: &[f64]| {
            let ub = bound.min(dist[target]);
            ub + TIE_TOL * ub
        };
        while let Some(Entry { d, v }) = heap.pop() {
            let u = v as usize;
            if settled[u] || d != dist[u] {
                continue;
            }
            settled[u] = true;
            if u == target {
                break;
            }
            let lim = limit(&dist);
            if d > lim {
                break;
            }
            let r = (self.cost.inverse(lim - d) * (1.0 + 1e-9) + 1e-12).min(radius_cap);
            cand.clear();
            epoch += 1;
            self.neighbors(u, r, &mut cand, &mut stamp, epoch);
            for &v in &cand {
                if settled[v] || v == u {
                    continue;
                }
                let nd = d + self.edge_cost(u, v);
                let lim = limit(&dist);
                if nd > lim {
                    continue;
                }
                if let Some(fl) = floor {
                    if nd + fl[v] > lim {
                        continue;
                    }
                }
                let cur = dist[v];
                let better = if cur.is_infinite() {
                    true
                } else if near_tie(nd, cur) {
                    pred[v] as usize != u && {
                        let mine = self.chain(u, &pred);
                        let theirs = self.chain(pred[v] as usize, &pred);
                        self.cmp_paths(&mine, &theirs) == Ordering::Less
                    }
                } else {
                    nd < cur
                };
                if better && self.w_pruning && self.dominated(u, v) {
                    continue;
                }
                if better {
                    dist[v] = nd;
                    pred[v] = u as u32;
                    heap.push(Entry { d: nd, v: v as u32 });
                }
            }
        }
        Labels { dist, pred, settled }
    }

    /// Optimal vertex sequence from source to target with its labels.
    ///
    /// `upper` must be the cost of some feasible path when given; otherwise a
    /// first pass over short edges supplies one.
    pub fn shortest(&self, upper: Option<f64>, floor: Option<&[f64]>) -> Option<(Vec<usize>, Labels)> {
        let n = self.num_nodes();
        if self.source == self.target {
            let mut dist = vec![f64::INFINITY; n];
            dist[self.source] = 0.0;
            let mut settled = vec![false; n];
            settled[self.source] = true;
            return Some((vec![self.source], Labels { dist, pred: vec![NONE; n], settled }));
        }
        let mut ub = self.edge_cost(self.source, self.target);
        match upper {
            Some(u) => ub = ub.min(u),
            None => {
                let seed = self.search(self.source, self.target, SEED_RADIUS, f64::INFINITY, floor);
                ub = ub.min(seed.dist[self.target]);
            }
        }
        let mut labels = self.search(self.source, self.target, f64::INFINITY, ub, floor);
        if !labels.dist[self.target].is_finite() {
            labels = self.search(self.source, self.target, f64::INFINITY, f64::INFINITY, None);
        }
        if !labels.dist[self.target].is_finite() {
            return None;
        }
        let ids = self.chain(self.target, &labels.pred);
        Some((ids, labels))
    }

    /// Minimum of `h` over each index cell.
    pub fn cell_minima(&self, h: &[f64]) -> Vec<f64> {
        (0..self.index.num_cells())
            .map(|c| self.index.cell_items(c).iter().map(|&w| h[w as usize]).fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Optimal source-target cost by A* after deleting the vertices `dead`
    /// and adding the points `extra` (flattened, ids from `num_nodes()` on).
    ///
    /// `h` must not exceed the remaining cost of any vertex but need not be
    /// consistent, so vertices may be expanded more than once; `cell_floor[c]
    /// + floor_shift` bounds `h` from below on index cell `c`. Only paths costing at most
    /// `upper` are explored; returns infinity when there is none.
    pub fn astar_with_changes(
        &self,
        dead: &[usize],
        extra: &[f64],
        upper: f64,
        h: impl Fn(usize) -> f64,
        cell_floor: &[f64],
        floor_shift: f64,
    ) -> f64 {
        assert!(self.free.is_none(), "A* runs on graphs without a free box");
        let d = self.dim;
        let base = self.num_nodes();
        let n = base + extra.len() / d;
        let point = |v: usize| if v < base { self.point(v) } else { &extra[(v - base) * d..(v - base + 1) * d] };
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        let mut cand = Vec::new();
        let (s, t) = (self.source, self.target);
        let ring_cost: Vec<f64> = (0..64).map(|k| self.cost.cost(k as f64 * CELL)).collect();
        dist[s] = 0.0;
        heap.push(Entry { d: h(s), v: s as u32 });
        let limit = |best: f64| {
            let ub = upper.min(best);
            ub + TIE_TOL * ub
        };
        while let Some(Entry { d: f, v }) = heap.pop() {
            let u = v as usize;
            let du = dist[u];
            if f != du + h(u) {
                continue;
            }
            if u == t {
                return du;
            }
            let lim = limit(dist[t]);
            if f > lim {
                break;
            }
            let r = self.cost.inverse(lim - du) * (1.0 + 1e-9) + 1e-12;
            let p = point(u);
            let lo: Vec<f64> = p.iter().map(|x| x - r).collect();
            let hi: Vec<f64> = p.iter().map(|x| x + r).collect();
            cand.clear();
            let index = &self.index;
            index.for_each_cell_in(p, &lo, &hi, |c, gap| {
                if du + ring_cost[gap.min(ring_cost.len() - 1)] + cell_floor[c] + floor_shift > lim {
                    return;
                }
                for &w in index.cell_items(c) {
                    cand.push(w as usize);
                }
            });
            cand.extend(base..n);
            for &w in &cand {
                if w == u || dead.contains(&w) {
                    continue;
                }
                let hw = h(w);
                if du + hw > lim {
                    continue;
                }
                let nd = du + self.cost.cost(distance(p, point(w)));
                if nd < dist[w] && nd + hw <= limit(dist[t]) {
                    dist[w] = nd;
                    heap.push(Entry { d: nd + hw, v: w as u32 });
                }
            }
        }
        if dist[t] <= upper * (1.0 + TIE_TOL) {
            dist[t]
        } else {
            f64::INFINITY
        }
    }

    fn anchor_for(&self, u: usize) -> Anchor {
        let f = self.free.as_ref().expect("graph has a free box");
        match self.super_link(u).1 {
            Some(m) => Anchor { point: f.members[m * self.dim..(m + 1) * self.dim].to_vec(), tag: f.member_tags[m] },
            None => Anchor { point: f.clamp(self.point(u)), tag: Tag::Boundary },
        }
    }

    pub fn expand(&self, ids: &[usize]) -> Expanded {
        let mut out = Expanded { points: Vec::new(), tags: Vec::new(), free: Vec::new() };
        let last = ids.len() - 1;
        for (i, &v) in ids.iter().enumerate() {
            if !self.is_super(v) {
                out.points.push(self.point(v).to_vec());
                out.tags.push(self.tags[v]);
                out.free.push(false);
                continue;
            }
            let entry = if i == 0 {
                self.source_anchor.clone().expect("supernode source has an anchor")
            } else {
                self.anchor_for(ids[i - 1])
            };
            let exit = if i == last {
                self.target_anchor.clone().expect("supernode target has an anchor")
            } else {
                self.anchor_for(ids[i + 1])
            };
            let distinct = exit.point != entry.point;
            out.points.push(entry.point);
            out.tags.push(entry.tag);
            out.free.push(false);
            if distinct {
                out.points.push(exit.point);
                out.tags.push(exit.tag);
                out.free.push(true);
            }
        }
        out
    }

    /// Sequential sum of edge costs along an id path (same order as the labels).
    pub fn path_cost(&self, ids: &[usize]) -> f64 {
        ids.windows(2).fold(0.0, |acc, w| acc + self.edge_cost(w[0], w[1]))
    }
}

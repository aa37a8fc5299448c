//! Cost functions, unit-box grid and segment traversal.
//!
//! Unit boxes are centered at integer points with lower faces inclusive, so the
//! box containing `x` has index `floor(x + 1/2)` coordinatewise.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Integer coordinates of the unit box centered at that lattice point.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct BoxIndex(pub SmallVec<[i64; 4]>);

impl BoxIndex {
    pub fn new(coords: &[i64]) -> Self {
        Self(SmallVec::from_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(SmallVec::from_elem(0, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn center(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }

    pub fn lower_corner(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64 - 0.5).collect()
    }

    /// L-infinity distance between box indices.
    pub fn linf_distance(&self, other: &BoxIndex) -> i64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0)
    }

    /// The 2d face neighbors, ordered by axis then direction (-, +).
    pub fn face_neighbors(&self) -> impl Iterator<Item = BoxIndex> + '_ {
        (0..self.dim()).flat_map(move |axis| {
            [-1i64, 1].into_iter().map(move |step| {
                let mut c = self.0.clone();
                c[axis] += step;
                BoxIndex(c)
            })
        })
    }

    pub fn is_face_adjacent(&self, other: &BoxIndex) -> bool {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<i64>()
            == 1
    }
}

impl fmt::Display for BoxIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Unit-box decomposition of R^d.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
}

impl GridSpec {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("dimension must be >= 2, got {dim}")));
        }
        Ok(Self { dim })
    }

    pub fn box_of(&self, p: &[f64]) -> BoxIndex {
        BoxIndex(p.iter().map(|&x| box_coord(x)).collect())
    }
}

#[inline]
pub(crate) fn box_coord(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Axis-aligned block of unit boxes, bounds inclusive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: BoxIndex,
    pub hi: BoxIndex,
}

impl Window {
    pub fn new(lo: BoxIndex, hi: BoxIndex) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch { expected: lo.dim(), got: hi.dim() });
        }
        if lo.0.iter().zip(hi.0.iter()).any(|(a, b)| a > b) {
            return Err(Error::EmptyWindow);
        }
        Ok(Self { lo, hi })
    }

    /// Boxes `[-margin, n + margin] x [-width, width]^(d-1)` around the segment from 0 to n e1.
    pub fn around_segment(dim: usize, n: f64, margin: i64, width: i64) -> Result<Self> {
        let mut lo = SmallVec::from_elem(-width, dim);
        let mut hi = SmallVec::from_elem(width, dim);
        lo[0] = -margin;
        hi[0] = n.ceil() as i64 + margin;
        Self::new(BoxIndex(lo), BoxIndex(hi))
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn extent(&self, axis: usize) -> usize {
        (self.hi.0[axis] - self.lo.0[axis] + 1) as usize
    }

    pub fn num_boxes(&self) -> usize {
        (0..self.dim()).map(|a| self.extent(a)).product()
    }

    pub fn contains_box(&self, b: &BoxIndex) -> bool {
        b.dim() == self.dim()
            && b.0
                .iter()
                .enumerate()
                .all(|(a, &c)| c >= self.lo.0[a] && c <= self.hi.0[a])
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .enumerate()
                .all(|(a, &x)| x >= self.lo.0[a] as f64 - 0.5 && x < self.hi.0[a] as f64 + 0.5)
    }

    /// Row-major position of a box (last axis fastest).
    pub fn linear_index(&self, b: &BoxIndex) -> Option<usize> {
        if !self.contains_box(b) {
            return None;
        }
        let mut idx = 0usize;
        for a in 0..self.dim() {
            idx = idx * self.extent(a) + (b.0[a] - self.lo.0[a]) as usize;
        }
        Some(idx)
    }

    pub fn box_at(&self, mut idx: usize) -> BoxIndex {
        let d = self.dim();
        let mut c: SmallVec<[i64; 4]> = SmallVec::from_elem(0, d);
        for a in (0..d).rev() {
            let e = self.extent(a);
            c[a] = self.lo.0[a] + (idx % e) as i64;
            idx /= e;
        }
        BoxIndex(c)
    }

    pub fn boxes(&self) -> impl Iterator<Item = BoxIndex> + '_ {
        (0..self.num_boxes()).map(move |i| self.box_at(i))
    }
}

/// `t^alpha` with the common integer exponents multiplied out.
#[inline]
pub(crate) fn pow(t: f64, alpha: f64) -> f64 {
    if alpha == 2.0 {
        t * t
    } else if alpha == 3.0 {
        t * t * t
    } else {
        t.powf(alpha)
    }
}

pub(crate) fn power_cost(alpha: f64, h: f64, t: f64) -> f64 {
    if t <= h {
        pow(t, alpha)
    } else {
        pow(h, alpha) + alpha * pow(h, alpha - 1.0) * (t - h)
    }
}

/// Parameters of the linearized power cost.
///
/// Below the cutoff `h_n = max(h0, h1 n^(1/(2 alpha)))` the cost is `t^alpha`;
/// above it the cost continues linearly with matched value and slope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiParams {
    alpha: f64,
    h0: f64,
    h1: f64,
    n: f64,
    h_n: f64,
}

impl PhiParams {
    pub fn new(alpha: f64, h0: f64, h1: f64, n: f64) -> Result<Self> {
        let mut bad = Vec::new();
        if !(alpha > 1.0 && alpha.is_finite()) {
            bad.push(format!("alpha must be > 1, got {alpha}"));
        }
        if !(h0 >= 1.0) {
            bad.push(format!("h0 must be >= 1, got {h0}"));
        }
        if !(h1 >= h0) {
            bad.push(format!("h1 must be >= h0, got {h1}"));
        }
        if !(n >= 0.0 && n.is_finite()) {
            bad.push(format!("n must be >= 0, got {n}"));
        }
        if !bad.is_empty() {
            return Err(Error::InvalidParameter(bad.join("; ")));
        }
        let h_n = h0.max(h1 * n.powf(1.0 / (2.0 * alpha)));
        Ok(Self { alpha, h0, h1, n, h_n })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn h0(&self) -> f64 {
        self.h0
    }
    pub fn h1(&self) -> f64 {
        self.h1
    }
    pub fn n(&self) -> f64 {
        self.n
    }
    pub fn h_n(&self) -> f64 {
        self.h_n
    }

    /// Cost of a segment of length `t`; `t` must be non-negative.
    #[inline]
    pub fn cost(&self, t: f64) -> f64 {
        power_cost(self.alpha, self.h_n, t)
    }

    /// Slope of [`cost`](Self::cost); the right-hand slope at the cutoff.
    #[inline]
    pub fn slope(&self, t: f64) -> f64 {
        let h = self.h_n;
        if t < h {
            self.alpha * t.powf(self.alpha - 1.0)
        } else {
            self.alpha * h.powf(self.alpha - 1.0)
        }
    }
}

pub fn phi_cost(params: &PhiParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::NegativeLength(t));
    }
    Ok(params.cost(t))
}

pub fn phi_derivative(params: &PhiParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveLength(t));
    }
    Ok(params.slope(t))
}

/// Edge-cost model of a passage time: pure power (`T`, `T'`) or linearized (`T''`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CostModel {
    Power { alpha: f64 },
    Phi(PhiParams),
}

impl CostModel {
    pub fn alpha(&self) -> f64 {
        match self {
            CostModel::Power { alpha } => *alpha,
            CostModel::Phi(p) => p.alpha,
        }
    }

    /// Linearization cutoff, infinite for the pure power cost.
    pub fn cutoff(&self) -> f64 {
        match self {
            CostModel::Power { .. } => f64::INFINITY,
            CostModel::Phi(p) => p.h_n,
        }
    }

    #[inline]
    pub fn cost(&self, t: f64) -> f64 {
        match self {
            CostModel::Power { alpha } => pow(t, *alpha),
            CostModel::Phi(p) => p.cost(t),
        }
    }

    #[inline]
    pub fn slope(&self, t: f64) -> f64 {
        match self {
            CostModel::Power { alpha } => alpha * t.powf(alpha - 1.0),
            CostModel::Phi(p) => p.slope(t),
        }
    }

    /// Largest length whose cost does not exceed `c`.
    pub fn inverse(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        let alpha = self.alpha();
        let h = self.cutoff();
        let hc = if h.is_finite() { h.powf(alpha) } else { f64::INFINITY };
        if c <= hc {
            c.powf(1.0 / alpha)
        } else {
            h + (c - hc) / (alpha * h.powf(alpha - 1.0))
        }
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Whether inserting `c` does not increase the cost of the direct `a`-`b` connection.
pub fn w_region_contains(params: &PhiParams, a: &[f64], b: &[f64], c: &[f64]) -> bool {
    params.cost(distance(a, c)) + params.cost(distance(c, b)) <= params.cost(distance(a, b))
}

/// Strict version: `c` makes the direct connection strictly worse than going through it.
pub fn w_region_strict(cost: &CostModel, a: &[f64], b: &[f64], c: &[f64]) -> bool {
    cost.cost(distance(a, c)) + cost.cost(distance(c, b)) < cost.cost(distance(a, b))
}

/// Is `2 e1 + E e2` inside the improvement region of `0` and `k e1`?
pub fn check_lemma_e_regions(params: &PhiParams, e: f64, k: f64) -> bool {
    let a = [0.0, 0.0];
    let b = [k, 0.0];
    let c = [2.0, e];
    w_region_contains(params, &a, &b, &c)
}

/// Is `ell e1 + c sqrt(ell) e2` inside the improvement region of `0` and `2 ell e1`?
pub fn check_lemma_w_dimensions(params: &PhiParams, ell: f64, c: f64) -> bool {
    let off = c * ell.sqrt();
    2.0 * params.cost((ell * ell + off * off).sqrt()) <= params.cost(2.0 * ell)
}

/// Unit boxes crossed by the segment `p -> q`, in traversal order.
///
/// Consecutive boxes always share a face: when the segment passes exactly
/// through an edge or corner, the crossing is resolved one axis at a time in
/// increasing axis order.
pub fn traverse_segment(grid: &GridSpec, p: &[f64], q: &[f64]) -> Vec<BoxIndex> {
    let d = grid.dim;
    let mut cur = grid.box_of(p);
    let target = grid.box_of(q);
    let mut out = vec![cur.clone()];
    if cur == target {
        return out;
    }

    let dir: SmallVec<[f64; 4]> = (0..d).map(|a| q[a] - p[a]).collect();
    let mut t_max: SmallVec<[f64; 4]> = SmallVec::from_elem(f64::INFINITY, d);
    let mut t_delta: SmallVec<[f64; 4]> = SmallVec::from_elem(f64::INFINITY, d);
    for a in 0..d {
        if dir[a] > 0.0 {
            let face = cur.0[a] as f64 + 0.5;
            t_max[a] = (face - p[a]) / dir[a];
            t_delta[a] = 1.0 / dir[a];
        } else if dir[a] < 0.0 {
            let face = cur.0[a] as f64 - 0.5;
            t_max[a] = (face - p[a]) / dir[a];
            t_delta[a] = -1.0 / dir[a];
        }
    }

    let guard: i64 = cur
        .0
        .iter()
        .zip(target.0.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<i64>()
        + 1;
    for _ in 0..guard {
        if cur == target {
            break;
        }
        let mut axis = usize::MAX;
        for a in 0..d {
            if cur.0[a] == target.0[a] {
                continue;
            }
            if axis == usize::MAX || t_max[a] < t_max[axis] {
                axis = a;
            }
        }
        cur.0[axis] += if dir[axis] > 0.0 { 1 } else { -1 };
        t_max[axis] += t_delta[axis];
        out.push(cur.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, h: f64) -> PhiParams {
        PhiParams::new(alpha, h, h, 0.0).unwrap()
    }

    #[test]
    fn phi_cost_examples() {
        let p = params(2.0, 4.0);
        assert_eq!(phi_cost(&p, 2.0).unwrap(), 4.0);
        assert_eq!(phi_cost(&p, 4.0).unwrap(), 16.0);
        assert_eq!(phi_cost(&p, 6.0).unwrap(), 32.0);
        assert_eq!(phi_cost(&p, 0.0).unwrap(), 0.0);
        assert!(matches!(phi_cost(&p, -1.0), Err(Error::NegativeLength(_))));
    }

    #[test]
    fn phi_derivative_examples() {
        let p = params(2.0, 4.0);
        assert_eq!(phi_derivative(&p, 3.0).unwrap(), 6.0);
        assert_eq!(phi_derivative(&p, 10.0).unwrap(), 8.0);
        assert_eq!(phi_derivative(&params(3.0, 1.0), 1.0).unwrap(), 3.0);
        assert!(phi_derivative(&p, 0.0).is_err());
    }

    #[test]
    fn cutoff_formula() {
        let p = PhiParams::new(2.0, 8.0, 8.0, 64.0).unwrap();
        assert!((p.h_n() - 8.0 * 64f64.powf(0.25)).abs() < 1e-12);
        let p = PhiParams::new(2.0, 8.0, 8.0, 0.5).unwrap();
        assert_eq!(p.h_n(), 8.0);
        assert!(PhiParams::new(1.0, 8.0, 8.0, 1.0).is_err());
        assert!(PhiParams::new(2.0, 0.5, 8.0, 1.0).is_err());
        assert!(PhiParams::new(2.0, 8.0, 4.0, 1.0).is_err());
        assert!(PhiParams::new(2.0, 8.0, 8.0, -1.0).is_err());
    }

    #[test]
    fn inverse_cost_round_trips() {
        let m = CostModel::Phi(params(2.5, 3.0));
        for &t in &[0.1, 1.0, 2.9, 3.0, 3.1, 50.0] {
            let c = m.cost(t);
            assert!((m.inverse(c) - t).abs() < 1e-9 * t.max(1.0));
        }
        let m = CostModel::Power { alpha: 2.0 };
        assert!((m.inverse(9.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn w_region_examples() {
        let p = params(2.0, 1e9);
        assert!(w_region_contains(&p, &[0.0, 0.0], &[4.0, 0.0], &[2.0, 0.0]));
        assert!(w_region_contains(&p, &[0.0, 0.0], &[4.0, 0.0], &[2.0, 1.9]));
        assert!(!w_region_contains(&p, &[0.0, 0.0], &[4.0, 0.0], &[0.0, 1.0]));
    }

    #[test]
    fn e_regions_examples() {
        let p = params(2.0, 1000.0);
        assert!(check_lemma_e_regions(&p, 1.0, 1000.0));
        // 5 + 2 <= 9: for alpha = 2 the region is the disk on the diameter [0, k].
        assert!(check_lemma_e_regions(&p, 1.0, 3.0));
        assert!(!check_lemma_e_regions(&p, 1.0, 2.2));
        assert!(check_lemma_e_regions(&p, 0.0, 10.0));
        assert!(check_lemma_e_regions(&params(3.0, 8.0), 0.0, 10.0));
    }

    #[test]
    fn w_dimensions_examples() {
        let p = params(2.0, 1e9);
        assert!(check_lemma_w_dimensions(&p, 2.0, 0.1));
        assert!(!check_lemma_w_dimensions(&p, 2.0, 10.0));
        assert!(check_lemma_w_dimensions(&params(1.5, 8.0), 3.0, 0.0));
    }

    #[test]
    fn traversal_examples() {
        let g = GridSpec::new(2).unwrap();
        let boxes = traverse_segment(&g, &[0.0, 0.0], &[2.0, 0.0]);
        assert_eq!(
            boxes,
            vec![BoxIndex::new(&[0, 0]), BoxIndex::new(&[1, 0]), BoxIndex::new(&[2, 0])]
        );
        assert_eq!(traverse_segment(&g, &[0.1, 0.1], &[0.1, 0.1]), vec![BoxIndex::new(&[0, 0])]);
        let corner = traverse_segment(&g, &[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(corner.len(), 3);
        assert_eq!(corner[1], BoxIndex::new(&[1, 0]));
        for w in corner.windows(2) {
            assert!(w[0].is_face_adjacent(&w[1]));
        }
    }

    #[test]
    fn traversal_respects_half_open_boundaries() {
        let g = GridSpec::new(2).unwrap();
        // 0.5 belongs to box 1, so this segment ends in box 1.
        let boxes = traverse_segment(&g, &[1.2, 0.0], &[0.5, 0.0]);
        assert_eq!(boxes, vec![BoxIndex::new(&[1, 0])]);
        let boxes = traverse_segment(&g, &[-0.2, 0.0], &[0.5, 0.0]);
        assert_eq!(boxes, vec![BoxIndex::new(&[0, 0]), BoxIndex::new(&[1, 0])]);
    }

    #[test]
    fn window_indexing_round_trips() {
        let w = Window::around_segment(2, 5.0, 2, 3).unwrap();
        assert_eq!(w.num_boxes(), 10 * 7);
        for (i, b) in w.boxes().enumerate() {
            assert_eq!(w.linear_index(&b), Some(i));
        }
        assert!(w.contains_point(&[-2.5, 3.49]));
        assert!(!w.contains_point(&[-2.51, 0.0]));
        assert!(!w.contains_point(&[7.5, 0.0]));
        assert!(Window::new(BoxIndex::new(&[1, 0]), BoxIndex::new(&[0, 0])).is_err());
    }
}

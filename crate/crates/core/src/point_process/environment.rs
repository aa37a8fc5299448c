use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoxIndex, GridSpec, Window};
use crate::point_process::tape::BoxTape;
use crate::rng::MasterSeed;

/// Cells per unit side never exceed this; below it thinning is a no-op at desk scale.
pub const MAX_CELLS_PER_SIDE: u64 = 1 << 30;

/// Thinning to one point per small cell of side `1 / (k 3^floor(n))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinningSpec {
    k: u64,
    n: f64,
}

impl ThinningSpec {
    /// `epsilon = 1/k` with `k` odd, so cells nest in unit boxes.
    pub fn new(k: u64, n: f64) -> Result<Self> {
        if k == 0 || k.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("epsilon must be 1/k with k odd, got k = {k}")));
        }
        if !(n >= 0.0 && n.is_finite()) {
            return Err(Error::InvalidParameter(format!("n must be >= 0, got {n}")));
        }
        Ok(Self { k, n })
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.k as f64
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn cells_per_side(&self) -> u64 {
        let mut cells = self.k;
        for _ in 0..(self.n.floor() as u64) {
            cells = cells.saturating_mul(3);
            if cells >= MAX_CELLS_PER_SIDE {
                return MAX_CELLS_PER_SIDE;
            }
        }
        cells.min(MAX_CELLS_PER_SIDE)
    }

    pub fn cell_side(&self) -> f64 {
        1.0 / self.cells_per_side() as f64
    }
}

/// Tape and realized (possibly thinned) points of one box.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxState {
    pub(crate) tape: BoxTape,
    /// Kept points, flattened with stride `dim`.
    pub(crate) points: Vec<f64>,
    /// Tape index of each kept point.
    pub(crate) kept: Vec<usize>,
}

impl BoxState {
    fn realize(bx: &BoxIndex, tape: BoxTape, thinning: Option<&ThinningSpec>) -> Self {
        let d = bx.dim();
        let corner = bx.lower_corner();
        let mut pts: Vec<(usize, Vec<f64>)> = (0..tape.count())
            .map(|k| {
                let u = tape.uniform(k);
                let p = (0..d)
                    .map(|a| {
                        let x = corner[a] + u[a];
                        // rounding can land exactly on the upper face
                        if x >= corner[a] + 1.0 {
                            (corner[a] + 1.0).next_down()
                        } else {
                            x
                        }
                    })
                    .collect();
                (k, p)
            })
            .collect();
        if let Some(spec) = thinning {
            pts = thin_box(&corner, pts, spec);
        }
        let mut points = Vec::with_capacity(pts.len() * d);
        let mut kept = Vec::with_capacity(pts.len());
        for (k, p) in pts {
            kept.push(k);
            points.extend_from_slice(&p);
        }
        Self { tape, points, kept }
    }

    pub fn tape(&self) -> &BoxTape {
        &self.tape
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }
}

fn thin_box(corner: &[f64], pts: Vec<(usize, Vec<f64>)>, spec: &ThinningSpec) -> Vec<(usize, Vec<f64>)> {
    if pts.len() < 2 {
        return pts;
    }
    let cps = spec.cells_per_side();
    let scale = cps as f64;
    let cell_of = |p: &[f64]| -> Vec<u64> {
        p.iter()
            .zip(corner)
            .map(|(&x, &c)| (((x - c) * scale).floor().max(0.0) as u64).min(cps - 1))
            .collect()
    };
    let mut keyed: Vec<(Vec<u64>, usize, Vec<f64>)> =
        pts.into_iter().map(|(k, p)| (cell_of(&p), k, p)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| lex_cmp(&a.2, &b.2)));
    let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut last: Option<Vec<u64>> = None;
    for (cell, k, p) in keyed {
        if last.as_ref() != Some(&cell) {
            out.push((k, p));
            last = Some(cell);
        }
    }
    out.sort_by_key(|(k, _)| *k);
    out
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Poisson configuration over a window of unit boxes.
///
/// Immutable; surgeries return new environments that share untouched boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    grid: GridSpec,
    window: Window,
    seed: MasterSeed,
    replicate: u64,
    thinning: Option<ThinningSpec>,
    boxes: Vec<Arc<BoxState>>,
}

impl Environment {
    /// Independent Poisson(1) boxes, fully determined by `(seed, replicate)`.
    pub fn sample(grid: GridSpec, window: Window, seed: MasterSeed, replicate: u64) -> Result<Self> {
        if window.dim() != grid.dim {
            return Err(Error::DimensionMismatch { expected: grid.dim, got: window.dim() });
        }
        let boxes = window
            .boxes()
            .map(|b| {
                let tape = BoxTape::keyed(seed, replicate, &b, 0)?;
                Ok(Arc::new(BoxState::realize(&b, tape, None)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, window, seed, replicate, thinning: None, boxes })
    }

    /// Environment from one tape per window box (row-major order).
    pub fn from_tapes(grid: GridSpec, window: Window, tapes: Vec<BoxTape>) -> Result<Self> {
        if window.dim() != grid.dim {
            return Err(Error::DimensionMismatch { expected: grid.dim, got: window.dim() });
        }
        if tapes.len() != window.num_boxes() {
            return Err(Error::Malformed(format!(
                "window has {} boxes, got {} tapes",
                window.num_boxes(),
                tapes.len()
            )));
        }
        let boxes = window
            .boxes()
            .zip(tapes)
            .map(|(b, t)| {
                if t.dim() != grid.dim {
                    return Err(Error::DimensionMismatch { expected: grid.dim, got: t.dim() });
                }
                Ok(Arc::new(BoxState::realize(&b, t, None)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, window, seed: MasterSeed(0), replicate: 0, thinning: None, boxes })
    }

    /// Environment holding exactly the given points.
    pub fn from_points(grid: GridSpec, window: Window, points: &[Vec<f64>]) -> Result<Self> {
        let mut per_box: Vec<Vec<Vec<f64>>> = vec![Vec::new(); window.num_boxes()];
        for p in points {
            if p.len() != grid.dim {
                return Err(Error::DimensionMismatch { expected: grid.dim, got: p.len() });
            }
            let b = grid.box_of(p);
            let idx = window.linear_index(&b).ok_or_else(|| Error::PointOutsideWindow(p.clone()))?;
            let corner = b.lower_corner();
            let u: Vec<f64> = p.iter().zip(&corner).map(|(x, c)| (x - c).clamp(0.0, 1.0 - f64::EPSILON)).collect();
            per_box[idx].push(u);
        }
        let tapes = per_box
            .into_iter()
            .map(|us| BoxTape::with_uniforms(grid.dim, us))
            .collect::<Result<Vec<_>>>()?;
        Self::from_tapes(grid, window, tapes)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn seed(&self) -> MasterSeed {
        self.seed
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    pub fn thinning(&self) -> Option<&ThinningSpec> {
        self.thinning.as_ref()
    }

    fn slot(&self, bx: &BoxIndex) -> Result<usize> {
        self.window.linear_index(bx).ok_or_else(|| Error::BoxOutsideWindow(bx.clone()))
    }

    pub fn box_state(&self, bx: &BoxIndex) -> Result<&BoxState> {
        Ok(&self.boxes[self.slot(bx)?])
    }

    pub(crate) fn state_at(&self, slot: usize) -> &BoxState {
        &self.boxes[slot]
    }

    pub fn tape(&self, bx: &BoxIndex) -> Result<&BoxTape> {
        Ok(&self.box_state(bx)?.tape)
    }

    /// Realized Poisson count of the box (before any thinning).
    pub fn count(&self, bx: &BoxIndex) -> Result<usize> {
        Ok(self.box_state(bx)?.tape.count())
    }

    /// Points of the box after thinning, flattened with stride `dim`.
    pub fn points_flat(&self, bx: &BoxIndex) -> Result<&[f64]> {
        Ok(&self.box_state(bx)?.points)
    }

    pub fn points(&self, bx: &BoxIndex) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        Ok(self.points_flat(bx)?.chunks(d).map(|c| c.to_vec()).collect())
    }

    pub fn num_points(&self) -> usize {
        let d = self.dim();
        self.boxes.iter().map(|b| b.points.len() / d).sum()
    }

    /// Every point with its box, in window order.
    pub fn all_points(&self) -> Vec<(BoxIndex, Vec<f64>)> {
        let d = self.dim();
        self.window
            .boxes()
            .zip(self.boxes.iter())
            .flat_map(|(b, s)| s.points.chunks(d).map(move |p| (b.clone(), p.to_vec())).collect::<Vec<_>>())
            .collect()
    }

    fn replace(&self, bx: &BoxIndex, tape: BoxTape) -> Result<Self> {
        let slot = self.slot(bx)?;
        let mut next = self.clone();
        next.boxes[slot] = Arc::new(BoxState::realize(bx, tape, self.thinning.as_ref()));
        Ok(next)
    }

    /// Points the box would hold (after this environment's thinning) under `tape`.
    pub(crate) fn points_with_tape(&self, bx: &BoxIndex, tape: BoxTape) -> Vec<f64> {
        BoxState::realize(bx, tape, self.thinning.as_ref()).points
    }

    pub(crate) fn resampled_tape(&self, bx: &BoxIndex, seed: MasterSeed, tag: u64) -> Result<BoxTape> {
        BoxTape::keyed(seed, self.replicate, bx, tag.wrapping_add(1))
    }

    /// Keeps only the left-most point of each cell (ties by full lexicographic order).
    pub fn thin(&self, spec: &ThinningSpec) -> Self {
        let boxes = self
            .window
            .boxes()
            .zip(self.boxes.iter())
            .map(|(b, s)| Arc::new(BoxState::realize(&b, s.tape.clone(), Some(spec))))
            .collect();
        Self { thinning: Some(*spec), boxes, ..self.clone() }
    }

    /// Sets bit `j` (1-based) of the box's Bernoulli tape.
    pub fn flip_bit(&self, bx: &BoxIndex, j: usize, value: bool) -> Result<Self> {
        let state = self.box_state(bx)?;
        if j > 0 && state.tape.bit(j) == value {
            return Ok(self.clone());
        }
        self.replace(bx, state.tape.with_bit(j, value)?)
    }

    /// Replaces the box's tapes by an independent copy keyed by `tag`.
    pub fn resample_box(&self, bx: &BoxIndex, seed: MasterSeed, tag: u64) -> Result<Self> {
        self.slot(bx)?;
        let tape = self.resampled_tape(bx, seed, tag)?;
        self.replace(bx, tape)
    }

    /// Moves the `k`-th realized point of the box to `position` (which must stay in the box).
    pub fn move_point(&self, bx: &BoxIndex, k: usize, position: &[f64]) -> Result<Self> {
        let state = self.box_state(bx)?;
        let tape_k = *state.kept.get(k).ok_or(Error::PointIndexOutOfRange {
            bx: bx.clone(),
            k,
            count: state.kept.len(),
        })?;
        if self.grid.box_of(position) != *bx {
            return Err(Error::InvalidParameter(format!("{position:?} is not inside box {bx}")));
        }
        let corner = bx.lower_corner();
        let u: Vec<f64> = position.iter().zip(&corner).map(|(x, c)| x - c).collect();
        self.replace(bx, state.tape.with_uniform(tape_k, &u)?)
    }
}

pub fn sample_environment(grid: GridSpec, window: Window, seed: MasterSeed, replicate: u64) -> Result<Environment> {
    Environment::sample(grid, window, seed, replicate)
}

pub fn thin_to_qn(env: &Environment, spec: &ThinningSpec) -> Environment {
    env.thin(spec)
}

pub fn flip_bit(env: &Environment, bx: &BoxIndex, j: usize, value: bool) -> Result<Environment> {
    env.flip_bit(bx, j, value)
}

pub fn resample_box(env: &Environment, bx: &BoxIndex, seed: MasterSeed, tag: u64) -> Result<Environment> {
    env.resample_box(bx, seed, tag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(2).unwrap()
    }

    fn small_window() -> Window {
        Window::new(BoxIndex::new(&[-2, -2]), BoxIndex::new(&[2, 2])).unwrap()
    }

    #[test]
    fn sampling_is_deterministic_and_points_stay_in_their_box() {
        let e1 = Environment::sample(grid(), small_window(), MasterSeed(9), 3).unwrap();
        let e2 = Environment::sample(grid(), small_window(), MasterSeed(9), 3).unwrap();
        assert_eq!(e1, e2);
        for (b, p) in e1.all_points() {
            assert_eq!(grid().box_of(&p), b);
        }
        for b in small_window().boxes() {
            assert_eq!(e1.count(&b).unwrap(), e1.points(&b).unwrap().len());
        }
    }

    #[test]
    fn thinning_keeps_leftmost_in_cell() {
        let w = Window::new(BoxIndex::new(&[0, 0]), BoxIndex::new(&[0, 0])).unwrap();
        let env = Environment::from_points(grid(), w, &[vec![0.25, 0.0], vec![0.125, 0.0078125]]).unwrap();
        // k = 1 and n = 0: one cell per unit box
        let thinned = env.thin(&ThinningSpec::new(1, 0.0).unwrap());
        assert_eq!(thinned.points(&BoxIndex::new(&[0, 0])).unwrap(), vec![vec![0.125, 0.0078125]]);
        assert_eq!(thinned.count(&BoxIndex::new(&[0, 0])).unwrap(), 2);
    }

    #[test]
    fn thinning_distinct_cells_is_identity() {
        let w = Window::new(BoxIndex::new(&[0, 0]), BoxIndex::new(&[1, 0])).unwrap();
        let pts = vec![vec![-0.4, -0.4], vec![0.4, 0.4], vec![1.0, 0.0]];
        let env = Environment::from_points(grid(), w, &pts).unwrap();
        let thinned = env.thin(&ThinningSpec::new(3, 0.0).unwrap());
        assert_eq!(thinned.all_points(), env.all_points());
    }

    #[test]
    fn thinning_spec_validation_and_floor() {
        assert!(ThinningSpec::new(4, 1.0).is_err());
        assert!(ThinningSpec::new(0, 1.0).is_err());
        let s = ThinningSpec::new(33, 2.0).unwrap();
        assert_eq!(s.cells_per_side(), 297);
        assert_eq!(ThinningSpec::new(33, 64.0).unwrap().cells_per_side(), MAX_CELLS_PER_SIDE);
    }

    #[test]
    fn flip_bit_examples() {
        let env = Environment::sample(grid(), small_window(), MasterSeed(1), 0).unwrap();
        let b = BoxIndex::new(&[0, 1]);
        let cur = env.tape(&b).unwrap().bit(2);
        assert_eq!(env.flip_bit(&b, 2, cur).unwrap(), env);
        let up = env.flip_bit(&b, 1, true).unwrap();
        assert!(up.count(&b).unwrap() >= env.count(&b).unwrap());

        let w = Window::new(BoxIndex::new(&[0, 0]), BoxIndex::new(&[0, 0])).unwrap();
        let tape = BoxTape::explicit(2, vec![false, true], vec![vec![0.3, 0.3], vec![0.6, 0.6]]).unwrap();
        let env = Environment::from_tapes(grid(), w, vec![tape]).unwrap();
        assert_eq!(env.count(&BoxIndex::origin(2)).unwrap(), 0);
        let flipped = env.flip_bit(&BoxIndex::origin(2), 1, true).unwrap();
        assert_eq!(flipped.count(&BoxIndex::origin(2)).unwrap(), 2);
    }

    #[test]
    fn resample_touches_only_one_box() {
        let env = Environment::sample(grid(), small_window(), MasterSeed(5), 2).unwrap();
        let b = BoxIndex::new(&[1, -1]);
        let r = env.resample_box(&b, MasterSeed(5), 0).unwrap();
        for other in small_window().boxes() {
            if other != b {
                assert_eq!(r.points(&other).unwrap(), env.points(&other).unwrap());
                assert_eq!(r.tape(&other).unwrap(), env.tape(&other).unwrap());
            }
        }
        assert_ne!(r.tape(&b).unwrap(), env.tape(&b).unwrap());
        assert!(env.resample_box(&BoxIndex::new(&[9, 9]), MasterSeed(5), 0).is_err());
    }

    #[test]
    fn surgery_on_thinned_environment_rethins() {
        let w = Window::new(BoxIndex::new(&[0, 0]), BoxIndex::new(&[0, 0])).unwrap();
        let env = Environment::from_points(grid(), w, &[vec![0.25, 0.0], vec![0.125, 0.0078125]]).unwrap();
        let thinned = env.thin(&ThinningSpec::new(1, 0.0).unwrap());
        let moved = thinned.move_point(&BoxIndex::origin(2), 0, &[0.375, 0.0]).unwrap();
        // the moved point is no longer left-most, so the other one survives
        assert_eq!(moved.points(&BoxIndex::origin(2)).unwrap(), vec![vec![0.25, 0.0]]);
    }
}

//! Greedy lattice animals: face-connected box sets containing the origin box.
//!
//! Exact maxima enumerate every animal of a given size (planar, size at
//! most [`MAX_EXACT_SIZE`]); [`animal_max_greedy`] gives a lower bound for
//! any size and dimension.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::BoxIndex;
use crate::point_process::BoxTape;
use crate::rng::MasterSeed;
use crate::stats::pairwise_sum;

pub const MAX_EXACT_SIZE: usize = 8;

/// Face-connected set of boxes containing the origin box, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeAnimal {
    boxes: Vec<BoxIndex>,
}

impl LatticeAnimal {
    pub fn new(mut boxes: Vec<BoxIndex>) -> Result<Self> {
        boxes.sort();
        boxes.dedup();
        let Some(first) = boxes.first() else {
            return Err(Error::InvalidParameter("an animal needs at least one box".into()));
        };
        let origin = BoxIndex::origin(first.dim());
        if boxes.binary_search(&origin).is_err() {
            return Err(Error::InvalidParameter("animal must contain the origin box".into()));
        }
        if !is_connected(&boxes) {
            return Err(Error::InvalidParameter("animal is not face-connected".into()));
        }
        Ok(Self { boxes })
    }

    pub fn boxes(&self) -> &[BoxIndex] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn weight(&self, w: &impl WeightSource) -> f64 {
        let ws: Vec<f64> = self.boxes.iter().map(|b| w.weight(b)).collect();
        pairwise_sum(&ws)
    }
}

/// Whether every box is reachable from the first through shared faces within the set.
pub fn is_connected(boxes: &[BoxIndex]) -> bool {
    let Some(start) = boxes.first() else {
        return true;
    };
    let set: HashSet<&BoxIndex> = boxes.iter().collect();
    let mut seen: HashSet<BoxIndex> = HashSet::from([start.clone()]);
    let mut stack = vec![start.clone()];
    while let Some(b) = stack.pop() {
        for nb in b.face_neighbors() {
            if set.contains(&nb) && seen.insert(nb.clone()) {
                stack.push(nb);
            }
        }
    }
    seen.len() == set.len()
}

/// Nonnegative weight per box.
pub trait WeightSource {
    fn weight(&self, b: &BoxIndex) -> f64;
}

/// Explicit weights; boxes not listed weigh zero.
#[derive(Clone, Debug, Default)]
pub struct AnimalWeights {
    map: HashMap<BoxIndex, f64>,
}

impl AnimalWeights {
    pub fn new(map: HashMap<BoxIndex, f64>) -> Result<Self> {
        if let Some((b, w)) = map.iter().find(|(_, w)| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!("weight of {b} must be finite and >= 0, got {w}")));
        }
        Ok(Self { map })
    }

    pub fn set(&mut self, b: BoxIndex, w: f64) -> Result<()> {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight of {b} must be finite and >= 0, got {w}")));
        }
        self.map.insert(b, w);
        Ok(())
    }
}

impl WeightSource for AnimalWeights {
    fn weight(&self, b: &BoxIndex) -> f64 {
        self.map.get(b).copied().unwrap_or(0.0)
    }
}

/// Poisson(1) box counts decoded from the keyed tapes, over all of space.
#[derive(Clone, Copy, Debug)]
pub struct PoissonWeights {
    pub seed: MasterSeed,
    pub replicate: u64,
}

impl WeightSource for PoissonWeights {
    fn weight(&self, b: &BoxIndex) -> f64 {
        BoxTape::keyed(self.seed, self.replicate, b, 0).map(|t| t.count() as f64).unwrap_or(0.0)
    }
}

fn check_exact(d: usize, m: usize) -> Result<()> {
    if d != 2 {
        return Err(Error::InvalidParameter(format!("exact enumeration is planar only, got d = {d}")));
    }
    if m == 0 || m > MAX_EXACT_SIZE {
        return Err(Error::InvalidParameter(format!("animal size must be in 1..={MAX_EXACT_SIZE}, got {m}")));
    }
    Ok(())
}

/// Fixed polyominoes of size `m`, each translated so its least cell (by row, then column) is the origin.
fn redelmeier(m: usize) -> Vec<Vec<(i64, i64)>> {
    // Cells (x, y) with y > 0, or y = 0 and x >= 0, can follow the origin.
    fn allowed(c: (i64, i64)) -> bool {
        c.1 > 0 || (c.1 == 0 && c.0 >= 0)
    }
    fn grow(
        m: usize,
        poly: &mut Vec<(i64, i64)>,
        untried: Vec<(i64, i64)>,
        seen: &mut HashSet<(i64, i64)>,
        out: &mut Vec<Vec<(i64, i64)>>,
    ) {
        let mut untried = untried;
        while let Some(c) = untried.pop() {
            poly.push(c);
            if poly.len() == m {
                out.push(poly.clone());
            } else {
                let mut next = untried.clone();
                let mut fresh = Vec::new();
                for nb in [(c.0 + 1, c.1), (c.0 - 1, c.1), (c.0, c.1 + 1), (c.0, c.1 - 1)] {
                    if allowed(nb) && seen.insert(nb) {
                        fresh.push(nb);
                        next.push(nb);
                    }
                }
                grow(m, poly, next, seen, out);
                for nb in fresh {
                    seen.remove(&nb);
                }
            }
            poly.pop();
        }
    }
    let mut out = Vec::new();
    let mut seen = HashSet::from([(0, 0)]);
    grow(m, &mut Vec::new(), vec![(0, 0)], &mut seen, &mut out);
    out
}

fn animals_cache(m: usize) -> &'static [LatticeAnimal] {
    static CACHE: OnceLock<Vec<Vec<LatticeAnimal>>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        (0..=MAX_EXACT_SIZE)
            .map(|m| {
                if m == 0 {
                    return Vec::new();
                }
                let mut set: BTreeSet<Vec<BoxIndex>> = BTreeSet::new();
                for poly in redelmeier(m) {
                    for &(cx, cy) in &poly {
                        let mut boxes: Vec<BoxIndex> =
                            poly.iter().map(|&(x, y)| BoxIndex::new(&[x - cx, y - cy])).collect();
                        boxes.sort();
                        set.insert(boxes);
                    }
                }
                set.into_iter().map(|boxes| LatticeAnimal { boxes }).collect()
            })
            .collect()
    });
    &all[m]
}

/// Every planar animal of exactly `m` boxes containing the origin, sorted.
pub fn enumerate_animals(d: usize, m: usize) -> Result<Vec<LatticeAnimal>> {
    check_exact(d, m)?;
    Ok(animals_cache(m).to_vec())
}

/// Exact maximum weight over animals of size `m`; ties go to the least animal.
pub fn animal_max_exact(weights: &impl WeightSource, m: usize, d: usize) -> Result<(f64, LatticeAnimal)> {
    check_exact(d, m)?;
    let mut cache: HashMap<&BoxIndex, f64> = HashMap::new();
    let mut best: Option<(f64, &LatticeAnimal)> = None;
    for a in animals_cache(m) {
        let ws: Vec<f64> = a.boxes.iter().map(|b| *cache.entry(b).or_insert_with(|| weights.weight(b))).collect();
        let v = pairwise_sum(&ws);
        if best.is_none_or(|(bv, _)| v > bv) {
            best = Some((v, a));
        }
    }
    let (v, a) = best.expect("at least one animal");
    Ok((v, a.clone()))
}

/// Greedy animal: repeatedly absorb the heaviest face neighbour (ties to the least box).
///
/// Returns the running value after each of the `m` boxes, the last entry being
/// the greedy value for size `m`, together with the final animal.
pub fn animal_greedy_trace(weights: &impl WeightSource, m: usize, d: usize) -> Result<(Vec<f64>, LatticeAnimal)> {
    if d < 1 || m == 0 {
        return Err(Error::InvalidParameter(format!("need d >= 1 and m >= 1, got d = {d}, m = {m}")));
    }
    let origin = BoxIndex::origin(d);
    let mut members: BTreeSet<BoxIndex> = BTreeSet::from([origin.clone()]);
    let mut frontier: BTreeSet<BoxIndex> = origin.face_neighbors().collect();
    let mut cache: HashMap<BoxIndex, f64> = HashMap::new();
    let mut w = |b: &BoxIndex| *cache.entry(b.clone()).or_insert_with(|| weights.weight(b));
    let mut total = w(&origin);
    let mut trace = vec![total];
    while members.len() < m {
        let mut pick: Option<(f64, &BoxIndex)> = None;
        for b in &frontier {
            let wb = w(b);
            if pick.is_none_or(|(pw, _)| wb > pw) {
                pick = Some((wb, b));
            }
        }
        let (wb, b) = pick.expect("frontier of a finite animal is never empty");
        let b = b.clone();
        frontier.remove(&b);
        for nb in b.face_neighbors() {
            if !members.contains(&nb) {
                frontier.insert(nb);
            }
        }
        members.insert(b);
        total += wb;
        trace.push(total);
    }
    Ok((trace, LatticeAnimal { boxes: members.into_iter().collect() }))
}

pub fn animal_max_greedy(weights: &impl WeightSource, m: usize, d: usize) -> Result<(f64, LatticeAnimal)> {
    let (trace, animal) = animal_greedy_trace(weights, m, d)?;
    Ok((*trace.last().expect("m >= 1"), animal))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_of_origin_animals() {
        let expected = [1, 4, 18, 76, 315, 1296, 5320, 21800];
        for (m, &n) in expected.iter().enumerate() {
            assert_eq!(enumerate_animals(2, m + 1).unwrap().len(), n, "m = {}", m + 1);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(enumerate_animals(2, 0).is_err());
        assert!(enumerate_animals(2, 9).is_err());
        assert!(enumerate_animals(3, 2).is_err());
    }

    #[test]
    fn every_animal_is_valid() {
        for a in enumerate_animals(2, 5).unwrap() {
            assert!(LatticeAnimal::new(a.boxes().to_vec()).is_ok());
        }
    }

    #[test]
    fn heavy_neighbour_is_taken() {
        let mut w = AnimalWeights::default();
        w.set(BoxIndex::new(&[0, -1]), 5.0).unwrap();
        let (v, a) = animal_max_exact(&w, 2, 2).unwrap();
        assert_eq!(v, 5.0);
        assert!(a.boxes().contains(&BoxIndex::new(&[0, -1])));
        let (g, _) = animal_max_greedy(&w, 2, 2).unwrap();
        assert_eq!(g, 5.0);
    }

    #[test]
    fn uniform_weights() {
        let ones = UnitWeights;
        assert_eq!(animal_max_exact(&ones, 3, 2).unwrap().0, 3.0);
        assert_eq!(animal_max_greedy(&ones, 3, 2).unwrap().0, 3.0);
        assert_eq!(animal_max_greedy(&ones, 10, 3).unwrap().0, 10.0);
    }

    struct UnitWeights;

    impl WeightSource for UnitWeights {
        fn weight(&self, _: &BoxIndex) -> f64 {
            1.0
        }
    }

    #[test]
    fn negative_weights_are_rejected() {
        let mut w = AnimalWeights::default();
        assert!(w.set(BoxIndex::origin(2), -1.0).is_err());
    }
}

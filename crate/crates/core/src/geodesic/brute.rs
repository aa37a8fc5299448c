//! Exhaustive search over simple paths; the reference for the label-setting search.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geodesic::graph::{near_tie, Graph, Tag, TIE_TOL};

/// Largest number of usable points (the free-box supernode counts as one).
pub const BRUTE_FORCE_LIMIT: usize = 8;

struct Search<'g> {
    g: &'g Graph,
    n: usize,
    costs: Vec<f64>,
    visited: Vec<bool>,
    path: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn offer(&mut self, cost: f64) {
        let take = match &self.best {
            None => true,
            Some((bc, bp)) => {
                if near_tie(cost, *bc) {
                    self.g.cmp_paths(&self.path, bp) == Ordering::Less
                } else {
                    cost < *bc
                }
            }
        };
        if take {
            self.best = Some((cost, self.path.clone()));
        }
    }

    fn walk(&mut self, u: usize, cost: f64) {
        if u == self.g.target {
            self.offer(cost);
            return;
        }
        if let Some((bc, _)) = &self.best {
            if cost > bc + TIE_TOL * bc {
                return;
            }
        }
        for v in 0..self.n {
            if self.visited[v] {
                continue;
            }
            let c = cost + self.costs[u * self.n + v];
            self.visited[v] = true;
            self.path.push(v);
            self.walk(v, c);
            self.path.pop();
            self.visited[v] = false;
        }
    }
}

pub(crate) fn brute_force(g: &Graph) -> Result<Vec<usize>> {
    let usable = g.tags.iter().filter(|t| matches!(t, Tag::Point { .. })).count() + usize::from(g.free.is_some());
    if usable > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyPoints { limit: BRUTE_FORCE_LIMIT, got: usable });
    }
    if g.source == g.target {
        return Ok(vec![g.source]);
    }
    let n = g.num_nodes();
    let costs = (0..n * n).map(|i| if i / n == i % n { 0.0 } else { g.edge_cost(i / n, i % n) }).collect();
    let mut s = Search { g, n, costs, visited: vec![false; n], path: vec![g.source, g.target], best: None };
    // Seeding with the direct edge makes the cost cutoff effective from the start.
    s.offer(s.costs[g.source * n + g.target]);
    s.path.pop();
    s.visited[g.source] = true;
    s.walk(g.source, 0.0);
    s.best.map(|(_, p)| p).ok_or(Error::Unreachable)
}

use serde::{Deserialize, Serialize};

use crate::geodesic::view::PathResult;
use crate::geometry::{traverse_segment, BoxIndex, GridSpec};

/// First and last use of one box by a geodesic.
///
/// `s_minus`/`s_plus` are the first and last path vertices inside the box;
/// `r_minus` precedes `s_minus` and `r_plus` follows `s_plus` (absent at the
/// path ends).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxVisit {
    pub bx: BoxIndex,
    pub r_minus: Option<Vec<f64>>,
    pub s_minus: Vec<f64>,
    pub s_plus: Vec<f64>,
    pub r_plus: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicStats {
    /// Boxes met by some segment, in path order without repeats.
    pub boxes_touched: Vec<BoxIndex>,
    /// `#C`, the number of touched boxes.
    pub count: usize,
    /// Boxes holding a path vertex, in order of first use.
    pub boxes_used: Vec<BoxIndex>,
    pub visits: Vec<BoxVisit>,
}

pub fn geodesic_stats(path: &PathResult, grid: &GridSpec) -> GeodesicStats {
    let mut touched: Vec<BoxIndex> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut note = |b: BoxIndex, touched: &mut Vec<BoxIndex>| {
        if seen.insert(b.clone()) {
            touched.push(b);
        }
    };
    if let Some(first) = path.vertices.first() {
        note(grid.box_of(first), &mut touched);
    }
    for w in path.vertices.windows(2) {
        for b in traverse_segment(grid, &w[0], &w[1]) {
            note(b, &mut touched);
        }
    }

    let vertex_boxes: Vec<BoxIndex> = path.vertices.iter().map(|v| grid.box_of(v)).collect();
    let mut used: Vec<BoxIndex> = Vec::new();
    for b in &vertex_boxes {
        if !used.contains(b) {
            used.push(b.clone());
        }
    }
    let last = path.vertices.len().saturating_sub(1);
    let visits = used
        .iter()
        .map(|b| {
            let first = vertex_boxes.iter().position(|x| x == b).expect("used box has a vertex");
            let lastpos = vertex_boxes.iter().rposition(|x| x == b).expect("used box has a vertex");
            BoxVisit {
                bx: b.clone(),
                r_minus: (first > 0).then(|| path.vertices[first - 1].clone()),
                s_minus: path.vertices[first].clone(),
                s_plus: path.vertices[lastpos].clone(),
                r_plus: (lastpos < last).then(|| path.vertices[lastpos + 1].clone()),
            }
        })
        .collect();
    GeodesicStats { count: touched.len(), boxes_touched: touched, boxes_used: used, visits }
}

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::graph::{Anchor, Expanded, FreeNode, Graph, Tag, Terminal};
use crate::geometry::{distance, BoxIndex, CostModel, PhiParams};
use crate::point_process::{lex_cmp, Environment};

/// How the query points enter the graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndpointMode {
    /// Replace each endpoint by its nearest process point (`T`).
    Snap,
    /// Add the endpoints as extra vertices (`T'`, `T''`).
    Insert,
}

/// An environment plus the modifications a passage time is taken over.
#[derive(Clone, Debug)]
pub struct EnvironmentView<'a> {
    pub base: &'a Environment,
    pub cost: CostModel,
    pub endpoints: EndpointMode,
    /// Additional path vertices that belong to no box count.
    pub extra_points: Vec<Vec<f64>>,
    pub emptied_box: Option<BoxIndex>,
    pub free_box: Option<BoxIndex>,
    /// Drop edges strictly improved by a third point before searching.
    pub w_pruning: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must be > 1, got {alpha}")))
    }
}

impl<'a> EnvironmentView<'a> {
    pub fn new(base: &'a Environment, cost: CostModel, endpoints: EndpointMode) -> Self {
        Self { base, cost, endpoints, extra_points: Vec::new(), emptied_box: None, free_box: None, w_pruning: false }
    }

    /// View for `T`: power cost, endpoints snapped to the process.
    pub fn power(base: &'a Environment, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self::new(base, CostModel::Power { alpha }, EndpointMode::Snap))
    }

    /// View for `T'`: power cost, endpoints inserted.
    pub fn power_inserted(base: &'a Environment, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self::new(base, CostModel::Power { alpha }, EndpointMode::Insert))
    }

    /// View for `T''`: linearized cost, endpoints inserted. `base` should already be thinned.
    pub fn phi(base: &'a Environment, params: PhiParams) -> Self {
        Self::new(base, CostModel::Phi(params), EndpointMode::Insert)
    }

    pub fn with_emptied_box(mut self, bx: BoxIndex) -> Self {
        self.emptied_box = Some(bx);
        self
    }

    pub fn with_free_box(mut self, bx: BoxIndex) -> Self {
        self.free_box = Some(bx);
        self
    }

    pub fn with_extra_points(mut self, points: Vec<Vec<f64>>) -> Self {
        self.extra_points = points;
        self
    }

    pub fn with_w_pruning(mut self, on: bool) -> Self {
        self.w_pruning = on;
        self
    }

    pub(crate) fn is_plain(&self) -> bool {
        self.extra_points.is_empty() && self.emptied_box.is_none() && self.free_box.is_none()
    }
}

/// Where a path vertex came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum VertexRef {
    /// `k`-th point (after thinning) of box `bx`.
    Point { bx: BoxIndex, k: usize },
    /// 0 = a, 1 = b, `2 + i` = `extra_points[i]`.
    Endpoint(usize),
    /// Entry or exit point on the boundary of an empty free box.
    FreeBoxBoundary,
}

/// A geodesic: vertices `r_0 .. r_k` and per-segment data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub vertices: Vec<Vec<f64>>,
    pub refs: Vec<VertexRef>,
    pub segment_lengths: Vec<f64>,
    /// Cost of each segment; zero for transit inside a free box.
    pub segment_costs: Vec<f64>,
    pub passage_time: f64,
    pub l_max: f64,
}

fn check_point(env: &Environment, p: &[f64]) -> Result<()> {
    if p.len() != env.dim() {
        return Err(Error::DimensionMismatch { expected: env.dim(), got: p.len() });
    }
    if !env.window().contains_point(p) {
        return Err(Error::PointOutsideWindow(p.to_vec()));
    }
    Ok(())
}

fn slot_of(env: &Environment, bx: &BoxIndex) -> Result<usize> {
    env.window().linear_index(bx).ok_or_else(|| Error::BoxOutsideWindow(bx.clone()))
}

struct Builder {
    dim: usize,
    coords: Vec<f64>,
    tags: Vec<Tag>,
    free: Option<FreeNode>,
    free_box: Option<BoxIndex>,
}

impl Builder {
    fn place(&mut self, env: &Environment, p: &[f64], tag: Tag) -> Terminal {
        if let (Some(f), Some(fb)) = (self.free.as_mut(), self.free_box.as_ref()) {
            if env.grid().box_of(p) == *fb {
                f.members.extend_from_slice(p);
                f.member_tags.push(tag);
                return Terminal::Super(Anchor { point: p.to_vec(), tag });
            }
        }
        self.coords.extend_from_slice(p);
        self.tags.push(tag);
        Terminal::Vertex(self.tags.len() - 1)
    }

    /// Nearest process point (regular or inside the free box), ties lexicographic.
    fn snap(&self, p: &[f64]) -> Result<Terminal> {
        let d = self.dim;
        let empty = Vec::new();
        let members = self.free.as_ref().map_or(&empty, |f| &f.members);
        let member_tags = self.free.as_ref().map_or(&[][..], |f| &f.member_tags[..]);
        let point_of = |(member, i): (bool, usize)| -> &[f64] {
            if member {
                &members[i * d..(i + 1) * d]
            } else {
                &self.coords[i * d..(i + 1) * d]
            }
        };
        let candidates = self
            .tags
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t, Tag::Point { .. }))
            .map(|(i, _)| (false, i))
            .chain(
                member_tags
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| matches!(t, Tag::Point { .. }))
                    .map(|(i, _)| (true, i)),
            );
        let mut best: Option<(f64, (bool, usize))> = None;
        for c in candidates {
            let q = point_of(c);
            let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            let replace = match best {
                None => true,
                Some((bs, bc)) => s < bs || (s == bs && lex_cmp(q, point_of(bc)) == Ordering::Less),
            };
            if replace {
                best = Some((s, c));
            }
        }
        match best {
            None => Err(Error::EmptyEnvironment),
            Some((_, (false, i))) => Ok(Terminal::Vertex(i)),
            Some((_, (true, i))) => Ok(Terminal::Super(Anchor { point: point_of((true, i)).to_vec(), tag: member_tags[i] })),
        }
    }
}

pub(crate) fn build_graph(view: &EnvironmentView, a: &[f64], b: &[f64]) -> Result<Graph> {
    let env = view.base;
    let d = env.dim();
    check_point(env, a)?;
    check_point(env, b)?;
    let emptied = view.emptied_box.as_ref().map(|bx| slot_of(env, bx)).transpose()?;
    let free_slot = view.free_box.as_ref().map(|bx| slot_of(env, bx)).transpose()?;
    if emptied.is_some() && emptied == free_slot {
        return Err(Error::InvalidParameter("a box cannot be both emptied and free".into()));
    }
    let free = view.free_box.as_ref().map(|bx| {
        let center = bx.center();
        FreeNode {
            lo: center.iter().map(|c| c - 0.5).collect(),
            hi: center.iter().map(|c| c + 0.5).collect(),
            center,
            members: Vec::new(),
            member_tags: Vec::new(),
        }
    });
    let mut builder = Builder {
        dim: d,
        coords: Vec::with_capacity((env.num_points() + 2 + view.extra_points.len()) * d),
        tags: Vec::with_capacity(env.num_points() + 2 + view.extra_points.len()),
        free,
        free_box: view.free_box.clone(),
    };
    for slot in 0..env.window().num_boxes() {
        if Some(slot) == emptied {
            continue;
        }
        let pts = &env.state_at(slot).points;
        for (k, p) in pts.chunks_exact(d).enumerate() {
            let tag = Tag::Point { slot: slot as u32, k: k as u32 };
            if Some(slot) == free_slot {
                let f = builder.free.as_mut().expect("free node exists");
                f.members.extend_from_slice(p);
                f.member_tags.push(tag);
            } else {
                builder.coords.extend_from_slice(p);
                builder.tags.push(tag);
            }
        }
    }
    for (i, p) in view.extra_points.iter().enumerate() {
        check_point(env, p)?;
        builder.place(env, p, Tag::Endpoint(i as u32 + 2));
    }
    let (source, target) = match view.endpoints {
        EndpointMode::Insert => {
            let s = builder.place(env, a, Tag::Endpoint(0));
            let t = if a == b {
                match &s {
                    Terminal::Vertex(v) => Terminal::Vertex(*v),
                    Terminal::Super(anchor) => Terminal::Super(anchor.clone()),
                }
            } else {
                builder.place(env, b, Tag::Endpoint(1))
            };
            (s, t)
        }
        EndpointMode::Snap => (builder.snap(a)?, builder.snap(b)?),
    };
    let mut g = Graph::assemble(d, view.cost, builder.coords, builder.tags, builder.free, source, target);
    g.w_pruning = view.w_pruning;
    Ok(g)
}

pub(crate) fn tag_to_ref(env: &Environment, tag: Tag) -> VertexRef {
    match tag {
        Tag::Point { slot, k } => VertexRef::Point { bx: env.window().box_at(slot as usize), k: k as usize },
        Tag::Endpoint(i) => VertexRef::Endpoint(i as usize),
        Tag::Boundary => VertexRef::FreeBoxBoundary,
    }
}

pub(crate) fn to_path_result(env: &Environment, cost: &CostModel, ex: Expanded) -> PathResult {
    let mut segment_lengths = Vec::with_capacity(ex.points.len().saturating_sub(1));
    let mut segment_costs = Vec::with_capacity(segment_lengths.capacity());
    let mut total = 0.0;
    for i in 1..ex.points.len() {
        let len = distance(&ex.points[i - 1], &ex.points[i]);
        let c = if ex.free[i] { 0.0 } else { cost.cost(len) };
        total += c;
        segment_lengths.push(len);
        segment_costs.push(c);
    }
    let l_max = segment_lengths.iter().cloned().fold(0.0, f64::max);
    PathResult {
        refs: ex.tags.iter().map(|&t| tag_to_ref(env, t)).collect(),
        vertices: ex.points,
        segment_lengths,
        segment_costs,
        passage_time: total,
        l_max,
    }
}

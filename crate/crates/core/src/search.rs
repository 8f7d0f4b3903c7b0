//! Backtracking fill of `lambda t0` by prototile copies, placed edge-to-edge against the
//! last open edge.
//!
//! Every placement records the edge operations it performed, so popping a tile
//! restores the stacks exactly and the cursor is recomputed from the tile itself.

use crate::error::{Error, Result};
use crate::geometry::{self, Edge, LatticePoint, RigidMotion, SegmentRelation, Vertex};
use crate::orientation::OrientationStore;
use crate::problem::Problem;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};

/// Tile edge that produced an open edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeOwner {
    pub tile: u32,
    pub edge: u8,
}

/// An edge with the uncovered side on the left of `from -> to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenEdge {
    pub edge: Edge,
    /// Direction index of `from -> to`.
    pub dir: u32,
    /// `None` for a starter.
    pub owner: Option<EdgeOwner>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedEdge {
    pub edge: Edge,
    pub boundary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
enum EdgeOp {
    RemovedOpen(u32, OpenEdge),
    PushedOpen,
    PushedClosed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedTile {
    pub proto: u32,
    pub motion: RigidMotion,
    pub flip: bool,
    pub second: bool,
    /// The open edge this tile was placed against.
    pub closed_edge_at_placement: Edge,
    /// Labeled vertices, `vertices[i] = motion(V_i)`.
    pub vertices: [LatticePoint; 3],
    /// Tile edge lying on `closed_edge_at_placement`.
    matched: u8,
    verts: [Vertex; 3],
    bbox: [f64; 4],
    ops: Vec<EdgeOp>,
    trail_mark: u32,
}

impl PlacedTile {
    /// The `(proto, flip, second)` cursor that produced this tile.
    pub fn cursor(&self) -> u32 {
        self.proto * 4 + u32::from(self.flip) * 2 + u32::from(self.second)
    }

    /// Endpoints of edge `i` in counterclockwise order around the tile.
    ///
    /// See also [`ccw_index`].
    pub fn ccw_edge(&self, i: usize) -> (LatticePoint, LatticePoint) {
        let a = self.vertices[(i + 1) % 3];
        let b = self.vertices[(i + 2) % 3];
        if self.motion.flip {
            (b, a)
        } else {
            (a, b)
        }
    }
}

/// Vertex indices of the counterclockwise traversal of edge `i`.
fn ccw_index(tile: &PlacedTile, i: usize) -> (usize, usize) {
    if tile.motion.flip {
        ((i + 2) % 3, (i + 1) % 3)
    } else {
        ((i + 1) % 3, (i + 2) % 3)
    }
}

/// Seed open edge on side `side` of `lambda t0`, starting at the image of `V_{side+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Starter {
    pub side: u8,
    pub length_class: u32,
    pub edge: OpenEdge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchState {
    pub t0: u32,
    pub starter: Starter,
    pub region: [LatticePoint; 3],
    region_v: [Vertex; 3],
    pub patch: Vec<PlacedTile>,
    pub open_edges: Vec<OpenEdge>,
    pub closed_edges: Vec<ClosedEdge>,
    pub mult: Vec<u32>,
    pub cursor: u32,
    /// Tiles below this depth belong to the branch this state was cut from.
    pub base_depth: u32,
    pub orient: OrientationStore,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Enforce orientation conditions (1) and (2) while placing.
    pub orientation: bool,
    /// Prune when an open edge can no longer be matched by any remaining prototile.
    pub frontier_cut: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            orientation: true,
            frontier_cut: false,
        }
    }
}

/// One tile of a completed patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResultTile {
    pub proto: u32,
    pub motion: RigidMotion,
}

/// A completed patch with support `lambda t0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RawResult {
    pub t0: u32,
    pub starter_class: u32,
    pub tiles: Vec<ResultTile>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    /// Stopped by a limit or an external stop request.
    Stopped,
}

/// Shared signals for one run of [`solve`].
#[derive(Default)]
pub struct Control<'a> {
    pub kill: Option<&'a AtomicBool>,
    pub stop: Option<&'a AtomicBool>,
    /// Placement counter shared across searches, checked against `max_nodes`.
    pub nodes: Option<&'a AtomicU64>,
    pub max_nodes: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub nodes: u64,
    pub results: u64,
    pub snapshots: u64,
}

/// One starter per length class with a positive entry in the column of `X` for the side.
pub fn make_starters(problem: &Problem, t0: usize, side: usize) -> Result<Vec<Starter>> {
    if side > 2 {
        return Err(Error::Config(format!(
            "starter side {side} is not 0, 1 or 2"
        )));
    }
    let region = problem.inflated(t0);
    let side_class = problem.edge_classes[t0][side] as usize;
    let dir = problem.edge_dirs[t0][side];
    let from = region.vertices[(side + 1) % 3];
    let mut out = Vec::new();
    for c in 1..=problem.field().degree() {
        if problem.x.get(c - 1, side_class - 1) > 0 {
            let to = from.add(&problem.lattice.scaled_direction(c as u32, i64::from(dir)));
            let edge = OpenEdge {
                edge: Edge {
                    from,
                    to,
                    length_class: c as u32,
                },
                dir,
                owner: None,
            };
            out.push(Starter {
                side: side as u8,
                length_class: c as u32,
                edge,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::NoStarter { proto: t0, side });
    }
    Ok(out)
}

impl SearchState {
    pub fn new(problem: &Problem, t0: usize, starter: Starter) -> Result<Self> {
        let region = problem.inflated(t0).vertices;
        Ok(SearchState {
            t0: t0 as u32,
            starter,
            region,
            region_v: region.map(|p| problem.lattice.vertex(&p)),
            patch: Vec::new(),
            open_edges: vec![starter.edge],
            closed_edges: Vec::new(),
            mult: problem.multiplicities(t0)?,
            cursor: 0,
            base_depth: 0,
            orient: OrientationStore::new(problem.num_vars()),
        })
    }

    pub fn depth(&self) -> usize {
        self.patch.len()
    }

    pub fn is_complete(&self) -> bool {
        self.mult.iter().all(|&m| m == 0)
    }

    pub fn to_result(&self) -> RawResult {
        RawResult {
            t0: self.t0,
            starter_class: self.starter.length_class,
            tiles: self
                .patch
                .iter()
                .map(|t| ResultTile {
                    proto: t.proto,
                    motion: t.motion,
                })
                .collect(),
        }
    }
}

/// All initial searches for `t0`.
pub fn initial_states(problem: &Problem, t0: usize, side: usize) -> Result<Vec<SearchState>> {
    make_starters(problem, t0, side)?
        .into_iter()
        .map(|s| SearchState::new(problem, t0, s))
        .collect()
}

/// The tile congruent to prototile `cursor / 4` laid against the last open edge, reflected
/// if bit 1 is set and using its second edge of the matching class if bit 0 is set.
pub fn place(problem: &Problem, state: &SearchState, cursor: u32) -> Option<PlacedTile> {
    let proto = (cursor / 4) as usize;
    let flip = cursor & 2 != 0;
    let second = cursor & 1 != 0;
    if state.mult.get(proto).copied().unwrap_or(0) == 0 {
        return None;
    }
    let e = state.open_edges.last()?;
    let classes = problem.edge_classes[proto];
    let i = (0..3)
        .filter(|&i| classes[i] == e.edge.length_class)
        .nth(usize::from(second))?;
    let n = problem.n();
    let two_n = 2 * n;
    let m = problem.edge_dirs[proto][i];
    let rot = if flip {
        (e.dir + m + n) % two_n
    } else {
        (e.dir + two_n - m) % two_n
    };
    let lin = RigidMotion {
        rot,
        flip,
        shift: LatticePoint::ZERO,
    };
    let v1 = problem.canon[proto].vertices[(i + 1) % 3];
    let anchor = if flip { e.edge.to } else { e.edge.from };
    let motion = RigidMotion {
        shift: anchor.sub(&problem.lattice.apply_motion(&lin, &v1)),
        ..lin
    };
    let vertices = problem.tile_vertices(proto, &motion);
    debug_assert_eq!(
        vertices[(i + 2) % 3],
        if flip { e.edge.from } else { e.edge.to }
    );
    let verts = vertices.map(|p| problem.lattice.vertex(&p));
    let bbox = geometry::bbox(&verts);
    Some(PlacedTile {
        proto: proto as u32,
        motion,
        flip,
        second,
        closed_edge_at_placement: e.edge,
        vertices,
        matched: i as u8,
        verts,
        bbox,
        ops: Vec::new(),
        trail_mark: 0,
    })
}

fn boxes_touch(a: &[f64; 4], b: &[f64; 4]) -> bool {
    let m = crate::geometry::FLOAT_MARGIN;
    !(a[2] < b[0] - m || b[2] < a[0] - m || a[3] < b[1] - m || b[3] < a[1] - m)
}

/// Index of the open edge equal to the counterclockwise tile edge `(p, q)`.
fn find_open(state: &SearchState, p: &LatticePoint, q: &LatticePoint) -> Option<usize> {
    state
        .open_edges
        .iter()
        .rposition(|o| o.edge.from == *p && o.edge.to == *q)
}

/// Orientation relations induced by the tile's edges that meet open tile edges.
fn relations(
    problem: &Problem,
    state: &SearchState,
    tile: &PlacedTile,
) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::new();
    for i in 0..3 {
        let (p, q) = tile.ccw_edge(i);
        let Some(idx) = find_open(state, &p, &q) else {
            continue;
        };
        let Some(owner) = state.open_edges[idx].owner else {
            continue;
        };
        let other = &state.patch[owner.tile as usize];
        let j = usize::from(owner.edge);
        let differ = tile.vertices[(i + 1) % 3] != other.vertices[(j + 1) % 3];
        out.push((
            Problem::var(tile.proto as usize, i),
            Problem::var(other.proto as usize, j),
            differ,
        ));
    }
    let _ = problem;
    out
}

/// Whether the tile can join the patch: inside the region, no interior overlap, only
/// edge-to-edge contacts, and orientation constraints satisfiable.
pub fn compatible(
    problem: &Problem,
    state: &mut SearchState,
    tile: &PlacedTile,
    opts: &SearchOptions,
) -> bool {
    let lat = &problem.lattice;
    if !tile
        .verts
        .iter()
        .all(|v| lat.point_in_closed_triangle_v(v, &state.region_v))
    {
        return false;
    }
    for other in &state.patch {
        if !boxes_touch(&tile.bbox, &other.bbox) {
            continue;
        }
        if lat.interiors_overlap_v(&tile.verts, &other.verts) {
            return false;
        }
        for i in 0..3 {
            let (a, b) = (&tile.verts[(i + 1) % 3], &tile.verts[(i + 2) % 3]);
            for j in 0..3 {
                let (c, d) = (&other.verts[(j + 1) % 3], &other.verts[(j + 2) % 3]);
                match lat.segment_relation_v((a, b), (c, d)) {
                    SegmentRelation::Equal
                    | SegmentRelation::Disjoint
                    | SegmentRelation::SharedEndpointOnly => {}
                    _ => return false,
                }
            }
        }
    }
    if opts.orientation {
        let rels = relations(problem, state, tile);
        let mark = state.orient.mark();
        let ok = rels.iter().all(|&(a, b, c)| state.orient.union(a, b, c));
        state.orient.rollback(mark);
        if !ok {
            return false;
        }
    }
    true
}

fn on_boundary(problem: &Problem, region: &[Vertex; 3], p: &Vertex, q: &Vertex) -> bool {
    let lat = &problem.lattice;
    (0..3).any(|s| {
        let a = &region[(s + 1) % 3];
        let b = &region[(s + 2) % 3];
        lat.orient(a, b, p) == Ordering::Equal && lat.orient(a, b, q) == Ordering::Equal
    })
}

/// Pushes a compatible tile and updates the edge stacks, counts and constraints.
pub fn step_forward(
    problem: &Problem,
    state: &mut SearchState,
    mut tile: PlacedTile,
    opts: &SearchOptions,
) {
    let n = problem.n();
    let two_n = 2 * n;
    let proto = tile.proto as usize;
    let i = usize::from(tile.matched);
    let index = state.patch.len() as u32;
    tile.trail_mark = state.orient.mark() as u32;
    if opts.orientation {
        for (a, b, c) in relations(problem, state, &tile) {
            let ok = state.orient.union(a, b, c);
            assert!(
                ok,
                "orientation constraints changed between compatible and step_forward"
            );
        }
    }
    let mut ops = Vec::with_capacity(4);
    let last = state
        .open_edges
        .pop()
        .expect("placement needs an open edge");
    ops.push(EdgeOp::RemovedOpen(state.open_edges.len() as u32, last));
    state.closed_edges.push(ClosedEdge {
        edge: last.edge,
        boundary: last.owner.is_none(),
    });
    ops.push(EdgeOp::PushedClosed);
    let order = if tile.flip {
        [(i + 2) % 3, (i + 1) % 3]
    } else {
        [(i + 1) % 3, (i + 2) % 3]
    };
    for e in order {
        let (p, q) = tile.ccw_edge(e);
        let class = problem.edge_classes[proto][e];
        if let Some(idx) = find_open(state, &p, &q) {
            let o = state.open_edges.remove(idx);
            ops.push(EdgeOp::RemovedOpen(idx as u32, o));
            state.closed_edges.push(ClosedEdge {
                edge: o.edge,
                boundary: false,
            });
            ops.push(EdgeOp::PushedClosed);
        } else if on_boundary(
            problem,
            &state.region_v,
            &tile.verts[ccw_index(&tile, e).0],
            &tile.verts[ccw_index(&tile, e).1],
        ) {
            state.closed_edges.push(ClosedEdge {
                edge: Edge {
                    from: p,
                    to: q,
                    length_class: class,
                },
                boundary: true,
            });
            ops.push(EdgeOp::PushedClosed);
        } else {
            let ccw_dir =
                problem.edge_direction(proto, e, &tile.motion) + if tile.flip { n } else { 0 };
            state.open_edges.push(OpenEdge {
                edge: Edge {
                    from: q,
                    to: p,
                    length_class: class,
                },
                dir: (ccw_dir + n) % two_n,
                owner: Some(EdgeOwner {
                    tile: index,
                    edge: e as u8,
                }),
            });
            ops.push(EdgeOp::PushedOpen);
        }
    }
    tile.ops = ops;
    state.mult[proto] -= 1;
    state.patch.push(tile);
}

/// Exact inverse of [`step_forward`]; leaves the cursor on the triple after the popped tile's.
pub fn step_back(state: &mut SearchState) -> Result<PlacedTile> {
    let tile = state
        .patch
        .pop()
        .ok_or_else(|| Error::Internal("step_back on an empty patch".into()))?;
    for op in tile.ops.iter().rev() {
        match op {
            EdgeOp::PushedClosed => {
                state
                    .closed_edges
                    .pop()
                    .ok_or_else(|| Error::Internal("closed stack underflow".into()))?;
            }
            EdgeOp::PushedOpen => {
                state
                    .open_edges
                    .pop()
                    .ok_or_else(|| Error::Internal("open stack underflow".into()))?;
            }
            EdgeOp::RemovedOpen(idx, e) => state.open_edges.insert(*idx as usize, *e),
        }
    }
    state.orient.rollback(tile.trail_mark as usize);
    state.mult[tile.proto as usize] += 1;
    state.cursor = tile.cursor() + 1;
    Ok(tile)
}

fn frontier_ok(problem: &Problem, state: &SearchState) -> bool {
    if state.is_complete() {
        return true;
    }
    state.open_edges.iter().all(|o| {
        (0..problem.num_protos())
            .any(|p| state.mult[p] > 0 && problem.edge_classes[p].contains(&o.edge.length_class))
    })
}

/// Enumerates every completion of `state` below its base depth.
///
/// `on_result` returns `false` to stop the search. When the kill switch is set, each
/// compatible placement becomes a snapshot handed to `on_snapshot` instead of a branch
/// to descend into.
pub fn solve(
    problem: &Problem,
    state: &mut SearchState,
    opts: &SearchOptions,
    ctl: &Control<'_>,
    on_result: &mut dyn FnMut(RawResult) -> bool,
    on_snapshot: &mut dyn FnMut(SearchState),
) -> Result<(Outcome, SolveStats)> {
    let limit = 4 * problem.num_protos() as u32;
    let mut stats = SolveStats::default();
    loop {
        if state.is_complete() {
            debug_assert!(state.patch.is_empty() || state.open_edges.is_empty());
            stats.results += 1;
            if !on_result(state.to_result()) {
                return Ok((Outcome::Stopped, stats));
            }
            if state.depth() <= state.base_depth as usize {
                return Ok((Outcome::Complete, stats));
            }
            step_back(state)?;
            continue;
        }
        if ctl.stop.is_some_and(|s| s.load(AtomicOrdering::Relaxed)) {
            return Ok((Outcome::Stopped, stats));
        }
        let mut descended = false;
        while state.cursor < limit {
            let c = state.cursor;
            state.cursor += 1;
            let Some(tile) = place(problem, state, c) else {
                continue;
            };
            if !compatible(problem, state, &tile, opts) {
                continue;
            }
            stats.nodes += 1;
            if let Some(counter) = ctl.nodes {
                let total = counter.fetch_add(1, AtomicOrdering::Relaxed) + 1;
                if ctl.max_nodes.is_some_and(|m| total > m) {
                    return Ok((Outcome::Stopped, stats));
                }
            } else if ctl.max_nodes.is_some_and(|m| stats.nodes > m) {
                return Ok((Outcome::Stopped, stats));
            }
            step_forward(problem, state, tile, opts);
            if opts.frontier_cut && !frontier_ok(problem, state) {
                step_back(state)?;
                continue;
            }
            if ctl.kill.is_some_and(|k| k.load(AtomicOrdering::Relaxed)) {
                let mut snap = state.clone();
                snap.cursor = 0;
                snap.base_depth = snap.patch.len() as u32;
                stats.snapshots += 1;
                on_snapshot(snap);
                step_back(state)?;
                continue;
            }
            state.cursor = 0;
            descended = true;
            break;
        }
        if descended {
            continue;
        }
        if state.depth() <= state.base_depth as usize {
            return Ok((Outcome::Complete, stats));
        }
        step_back(state)?;
    }
}

/// Runs every starter of every prototile on one thread.
pub fn solve_all_sequential(
    problem: &Problem,
    side: usize,
    opts: &SearchOptions,
) -> Result<Vec<RawResult>> {
    let mut out = Vec::new();
    for t0 in 0..problem.num_protos() {
        for mut st in initial_states(problem, t0, side)? {
            solve(
                problem,
                &mut st,
                opts,
                &Control::default(),
                &mut |r| {
                    out.push(r);
                    true
                },
                &mut |_| {},
            )?;
        }
    }
    out.sort();
    Ok(out)
}

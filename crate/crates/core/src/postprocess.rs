//! From raw search results to substitution rules.
//!
//! Orientations are handled as bit masks over the `3 |PT|` edge variables (see
//! [`crate::orientation`]). A result is compatible with a mask when its shared edges get
//! matching arrows, and then each side of the inflated prototile has a breakdown: the
//! sub-edges met when walking from the side's arrow origin, each with its length class
//! and whether its own arrow points along the walk. A combination is a mask together
//! with one breakdown per length class such that every prototile has a compatible
//! result; its family is the set of those results.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::FieldElement;
use crate::geometry::{self, LatticePoint, RigidMotion, SegmentRelation, Vertex};
use crate::matrix::IntMatrix;
use crate::problem::Problem;
use crate::search::{RawResult, ResultTile};
use crate::{Error, Result};

/// Sub-edges along a side: `(length class, arrow agrees with the reading direction)`.
pub type Breakdown = Vec<(u32, bool)>;

/// Largest number of orientation variables enumerated exhaustively.
pub const MAX_ORIENTATION_VARS: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct SubEdge {
    class: u32,
    var: u8,
    /// With the variable false, the arrow runs from the side's start towards its end.
    forward: bool,
}

/// Orientation data of one raw result that does not depend on the mask.
#[derive(Clone, Debug)]
struct Skeleton {
    t0: usize,
    /// Sub-edges of side `j`, listed from `V_{j+1}` to `V_{j+2}` of the inflated tile.
    sides: [Vec<SubEdge>; 3],
    /// `x_a ^ x_b = c` for every interior edge.
    relations: Vec<(u8, u8, bool)>,
}

fn bit(mask: u32, v: u8) -> bool {
    mask >> v & 1 == 1
}

impl Skeleton {
    fn new(problem: &Problem, result: &RawResult) -> Result<Self> {
        let lat = &problem.lattice;
        let t0 = result.t0 as usize;
        let region = problem.inflated(t0).vertices;
        let mut sides: [Vec<SubEdge>; 3] = Default::default();
        let mut seen: HashMap<(LatticePoint, LatticePoint), (u8, LatticePoint)> = HashMap::new();
        let mut relations = Vec::new();
        let mut on_side: [Vec<(LatticePoint, LatticePoint, SubEdge)>; 3] = Default::default();
        for t in &result.tiles {
            let p = t.proto as usize;
            let v = problem.tile_vertices(p, &t.motion);
            for i in 0..3 {
                let (u, w) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                let var = Problem::var(p, i) as u8;
                let class = problem.edge_classes[p][i];
                let side = (0..3).find(|&j| {
                    let (a, b) = (&region[(j + 1) % 3], &region[(j + 2) % 3]);
                    lat.orientation_sign(a, b, &u).is_eq() && lat.orientation_sign(a, b, &w).is_eq()
                });
                if let Some(j) = side {
                    let (a, b) = (region[(j + 1) % 3], region[(j + 2) % 3]);
                    let forward = lat.dot_sign(&w.sub(&u), &b.sub(&a)).is_gt();
                    let (near, far) = if forward { (u, w) } else { (w, u) };
                    on_side[j].push((
                        near,
                        far,
                        SubEdge {
                            class,
                            var,
                            forward,
                        },
                    ));
                    continue;
                }
                let key = if u < w { (u, w) } else { (w, u) };
                match seen.remove(&key) {
                    Some((other, start)) => relations.push((other, var, start != u)),
                    None => {
                        seen.insert(key, (var, u));
                    }
                }
            }
        }
        if !seen.is_empty() {
            return Err(Error::Verification(format!(
                "result for prototile {t0} has {} unmatched interior edges",
                seen.len()
            )));
        }
        for j in 0..3 {
            let (a, b) = (region[(j + 1) % 3], region[(j + 2) % 3]);
            let mut at = a;
            let mut pieces = std::mem::take(&mut on_side[j]);
            while at != b {
                let k = pieces
                    .iter()
                    .position(|(near, _, _)| *near == at)
                    .ok_or_else(|| {
                        Error::Verification(format!(
                            "side {j} of the result for prototile {t0} is not tiled exactly"
                        ))
                    })?;
                let (_, far, e) = pieces.swap_remove(k);
                sides[j].push(e);
                at = far;
            }
            if !pieces.is_empty() {
                return Err(Error::Verification(format!(
                    "side {j} of the result for prototile {t0} is covered twice"
                )));
            }
        }
        Ok(Skeleton {
            t0,
            sides,
            relations,
        })
    }

    fn consistent(&self, mask: u32) -> bool {
        self.relations
            .iter()
            .all(|&(a, b, c)| bit(mask, a) ^ bit(mask, b) == c)
    }

    fn breakdown(&self, mask: u32, side: usize) -> Breakdown {
        let rev = bit(mask, Problem::var(self.t0, side) as u8);
        let agree = |e: &SubEdge| (e.class, e.forward ^ bit(mask, e.var) ^ rev);
        if rev {
            self.sides[side].iter().rev().map(agree).collect()
        } else {
            self.sides[side].iter().map(agree).collect()
        }
    }

    /// Breakdowns per length class of `t0`, or `None` if two sides of one class disagree
    /// or an interior edge gets two arrows.
    fn key(&self, problem: &Problem, mask: u32) -> Option<BTreeMap<u32, Breakdown>> {
        if !self.consistent(mask) {
            return None;
        }
        let mut out = BTreeMap::new();
        for j in 0..3 {
            let b = self.breakdown(mask, j);
            match out.entry(problem.edge_classes[self.t0][j]) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(b);
                }
                std::collections::btree_map::Entry::Occupied(e) => {
                    if *e.get() != b {
                        return None;
                    }
                }
            }
        }
        Some(out)
    }
}

/// Breakdowns of each side of `lambda t0` under a total orientation.
pub fn extract_breakdowns(
    problem: &Problem,
    result: &RawResult,
    orientation: &[bool],
) -> Result<[Breakdown; 3]> {
    let sk = Skeleton::new(problem, result)?;
    let mask = to_mask(orientation);
    Ok(std::array::from_fn(|j| sk.breakdown(mask, j)))
}

/// Sum of the sub-edge lengths on each side, as counts per length class.
/// Least total orientation under which the interior edges of `result` match, if any.
pub fn least_orientation(problem: &Problem, result: &RawResult) -> Result<Option<Vec<bool>>> {
    let vars = problem.num_vars();
    if vars > MAX_ORIENTATION_VARS {
        return Err(Error::Config(format!(
            "more than {MAX_ORIENTATION_VARS} orientation variables"
        )));
    }
    let sk = Skeleton::new(problem, result)?;
    Ok((0..1u32 << vars)
        .find(|&m| sk.consistent(m))
        .map(|m| from_mask(m, vars)))
}

pub fn side_length_counts(problem: &Problem, result: &RawResult) -> Result<[Vec<u32>; 3]> {
    let sk = Skeleton::new(problem, result)?;
    let d = problem.field().degree();
    Ok(std::array::from_fn(|j| {
        let mut c = vec![0; d];
        for e in &sk.sides[j] {
            c[e.class as usize - 1] += 1;
        }
        c
    }))
}

pub fn to_mask(orientation: &[bool]) -> u32 {
    orientation
        .iter()
        .enumerate()
        .fold(0, |m, (i, &b)| m | u32::from(b) << i)
}

pub fn from_mask(mask: u32, vars: usize) -> Vec<bool> {
    (0..vars).map(|i| bit(mask, i as u8)).collect()
}

/// Replaces every copy of the prototiles in `protos` (a bit set) by the same triangle
/// reached through its axis reflection.
pub fn toggle(problem: &Problem, result: &RawResult, protos: u32) -> RawResult {
    let mut out = result.clone();
    for t in &mut out.tiles {
        if protos >> t.proto & 1 == 1 {
            if let Some((_, s)) = &problem.axis[t.proto as usize] {
                t.motion = problem.lattice.compose(&t.motion, s);
            }
        }
    }
    out.tiles.sort();
    out
}

fn isosceles_mask(problem: &Problem) -> u32 {
    (0..problem.num_protos())
        .filter(|&p| problem.is_isosceles(p))
        .fold(0, |m, p| m | 1 << p)
}

fn subsets(mask: u32) -> impl Iterator<Item = u32> {
    let mut s = Some(mask);
    std::iter::from_fn(move || {
        let cur = s?;
        s = if cur == 0 {
            None
        } else {
            Some((cur - 1) & mask)
        };
        Some(cur)
    })
}

/// Least form of `result` over all reflections of isosceles copies, with the toggle set
/// that produced it. Toggles are involutions, so the same set maps it back.
pub fn canonicalize_with(problem: &Problem, result: &RawResult) -> (RawResult, u32) {
    let mut best: Option<(RawResult, u32)> = None;
    for s in subsets(isosceles_mask(problem)) {
        let r = toggle(problem, result, s);
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, s));
        }
    }
    best.expect("the empty toggle is always tried")
}

pub fn canonicalize(problem: &Problem, result: &RawResult) -> RawResult {
    canonicalize_with(problem, result).0
}

/// Edge variables of prototile `p` after relabeling it through its axis reflection.
fn relabel(problem: &Problem, mask: u32, protos: u32) -> u32 {
    let mut out = mask;
    for p in 0..problem.num_protos() {
        if protos >> p & 1 == 0 {
            continue;
        }
        let Some((perm, _)) = &problem.axis[p] else {
            continue;
        };
        for (i, &j) in perm.iter().enumerate() {
            let v = !bit(mask, Problem::var(p, j) as u8);
            let i = Problem::var(p, i);
            out = (out & !(1 << i)) | u32::from(v) << i;
        }
    }
    out
}

fn class_count(problem: &Problem) -> usize {
    problem
        .edge_classes
        .iter()
        .flatten()
        .map(|&c| c as usize + 1)
        .max()
        .unwrap_or(0)
}

/// Variables of every edge whose length class is in `classes`.
fn class_vars(problem: &Problem, classes: u32) -> u32 {
    let mut out = 0;
    for (p, cl) in problem.edge_classes.iter().enumerate() {
        for (i, &c) in cl.iter().enumerate() {
            if classes >> c & 1 == 1 {
                out |= 1 << Problem::var(p, i);
            }
        }
    }
    out
}

/// Breakdowns after reversing every arrow on edges of the given length classes.
fn reverse_breakdowns(b: &BTreeMap<u32, Breakdown>, classes: u32) -> BTreeMap<u32, Breakdown> {
    let hit = |c: u32| classes >> c & 1 == 1;
    b.iter()
        .map(|(&c, v)| {
            let flip = |&(d, s): &(u32, bool)| (d, s ^ hit(c) ^ hit(d));
            let out = if hit(c) {
                v.iter().rev().map(flip).collect()
            } else {
                v.iter().map(flip).collect()
            };
            (c, out)
        })
        .collect()
}

/// Images of a combination under relabelings of isosceles prototiles and reversal of
/// all arrows of some length classes. All of them describe the same substitutions.
fn orbit_key(
    problem: &Problem,
    mask: u32,
    b: &BTreeMap<u32, Breakdown>,
) -> (u32, BTreeMap<u32, Breakdown>) {
    let mut best: Option<(u32, BTreeMap<u32, Breakdown>)> = None;
    for classes in 0..1u32 << class_count(problem) {
        let rb = reverse_breakdowns(b, classes);
        let flip = class_vars(problem, classes);
        for s in subsets(isosceles_mask(problem)) {
            let m = relabel(problem, mask ^ flip, s);
            if best.as_ref().is_none_or(|(bm, bb)| (m, &rb) < (*bm, bb)) {
                best = Some((m, rb.clone()));
            }
        }
    }
    best.expect("nonempty orbit")
}

fn orientation_orbit(problem: &Problem, mask: u32) -> BTreeSet<u32> {
    (0..1u32 << class_count(problem))
        .flat_map(|classes| {
            let m = mask ^ class_vars(problem, classes);
            subsets(isosceles_mask(problem)).map(move |s| relabel(problem, m, s))
        })
        .collect()
}

fn orientation_key(problem: &Problem, mask: u32) -> u32 {
    *orientation_orbit(problem, mask)
        .first()
        .expect("nonempty orbit")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Member {
    /// Index into [`Postprocessed::results`].
    pub result: usize,
    /// Isosceles prototiles whose copies are reflected to obtain the compatible labeling.
    pub toggle: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    pub orientation: Vec<bool>,
    pub breakdowns: BTreeMap<u32, Breakdown>,
    /// Compatible canonical results, per prototile.
    pub members: Vec<Vec<Member>>,
    /// Number of raw combinations identified with this one.
    pub equivalent: usize,
    pub orientation_class: usize,
}

impl Family {
    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn rule_count(&self) -> u128 {
        self.members.iter().map(|m| m.len() as u128).product()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Belongs to at least one family.
    Complete,
    /// Admits orientations but combines with no results for some other prototile.
    Partial,
    /// No orientation makes its own edges consistent.
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalResult {
    pub result: RawResult,
    pub status: Status,
    /// Raw labelings found by the search.
    pub labelings: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientationClass {
    /// A member of the class, satisfying the vertex polarity property when one does.
    pub orientation: Vec<bool>,
    pub standard: bool,
    pub families: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Postprocessed {
    pub results: Vec<CanonicalResult>,
    pub families: Vec<Family>,
    pub orientation_classes: Vec<OrientationClass>,
    /// Combinations before identifying relabelings and reversal.
    pub raw_combinations: usize,
    /// Results sharing a family, as adjacency lists over `results`.
    pub graph: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub orientation: Vec<bool>,
    pub breakdowns: BTreeMap<u32, Breakdown>,
    /// The result used for each prototile, labeled to match `orientation`.
    pub results: Vec<RawResult>,
}

type PartialKey = BTreeMap<u32, Breakdown>;

/// Canonicalizes, finds every combination and groups them into families.
pub fn postprocess(problem: &Problem, raw: &[RawResult]) -> Result<Postprocessed> {
    let vars = problem.num_vars();
    if vars > MAX_ORIENTATION_VARS {
        return Err(Error::Config(format!(
            "postprocessing enumerates orientations of at most {} prototiles",
            MAX_ORIENTATION_VARS / 3
        )));
    }
    let np = problem.num_protos();
    if let Some(r) = raw.iter().find(|r| r.t0 as usize >= np) {
        return Err(Error::Archive(format!(
            "result for unknown prototile {}",
            r.t0
        )));
    }

    let canon: Vec<(RawResult, u32)> = raw.iter().map(|r| canonicalize_with(problem, r)).collect();
    let distinct: Vec<RawResult> = canon
        .iter()
        .map(|(c, _)| c.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&RawResult, usize> =
        distinct.iter().enumerate().map(|(i, r)| (r, i)).collect();
    let mut labelings = vec![0; distinct.len()];
    let mut admits = vec![false; distinct.len()];

    // (mask, prototile) -> breakdowns on its classes -> members
    let mut table: HashMap<(u32, usize), BTreeMap<PartialKey, BTreeSet<Member>>> = HashMap::new();
    for (r, (c, s)) in raw.iter().zip(&canon) {
        let id = index[c];
        labelings[id] += 1;
        let sk = Skeleton::new(problem, r)?;
        for mask in 0..1u32 << vars {
            if let Some(k) = sk.key(problem, mask) {
                admits[id] = true;
                table
                    .entry((mask, sk.t0))
                    .or_default()
                    .entry(k)
                    .or_default()
                    .insert(Member {
                        result: id,
                        toggle: *s,
                    });
            }
        }
    }

    // Join per-prototile breakdowns into full combinations.
    let mut combos: BTreeMap<(u32, PartialKey), Vec<Vec<Member>>> = BTreeMap::new();
    for mask in 0..1u32 << vars {
        let per: Option<Vec<_>> = (0..np).map(|p| table.get(&(mask, p))).collect();
        let Some(per) = per else { continue };
        let mut stack: Vec<(usize, PartialKey, Vec<Vec<Member>>)> =
            vec![(0, BTreeMap::new(), Vec::new())];
        while let Some((p, acc, members)) = stack.pop() {
            if p == np {
                combos.insert((mask, acc), members);
                continue;
            }
            for (k, m) in per[p] {
                if k.iter().all(|(c, b)| acc.get(c).is_none_or(|x| x == b)) {
                    let mut acc2 = acc.clone();
                    acc2.extend(k.iter().map(|(c, b)| (*c, b.clone())));
                    let mut mem2 = members.clone();
                    mem2.push(dedup_members(m));
                    stack.push((p + 1, acc2, mem2));
                }
            }
        }
    }

    let mut orbits: BTreeMap<(u32, PartialKey), usize> = BTreeMap::new();
    for (mask, b) in combos.keys() {
        *orbits.entry(orbit_key(problem, *mask, b)).or_default() += 1;
    }
    let mut class_ids: BTreeMap<u32, usize> = BTreeMap::new();
    for (mask, _) in orbits.keys() {
        let k = orientation_key(problem, *mask);
        let next = class_ids.len();
        class_ids.entry(k).or_insert(next);
    }
    let mut families = Vec::new();
    let mut orientation_classes: Vec<OrientationClass> = class_ids
        .keys()
        .map(|&k| {
            let polar = orientation_orbit(problem, k)
                .into_iter()
                .find(|&m| vertex_polarity_holds(problem, &from_mask(m, vars)));
            OrientationClass {
                orientation: from_mask(polar.unwrap_or(k), vars),
                standard: polar.is_some(),
                families: Vec::new(),
            }
        })
        .collect();
    for ((mask, b), equivalent) in orbits {
        let members = combos.get(&(mask, b.clone())).cloned().ok_or_else(|| {
            Error::Internal("combination set is not closed under relabeling".into())
        })?;
        let class = class_ids[&orientation_key(problem, mask)];
        orientation_classes[class].families.push(families.len());
        families.push(Family {
            orientation: from_mask(mask, vars),
            breakdowns: b,
            members,
            equivalent,
            orientation_class: class,
        });
    }

    let mut adjacency = vec![BTreeSet::new(); distinct.len()];
    let mut complete = vec![false; distinct.len()];
    for members in combos.values() {
        let ids: Vec<usize> = members.iter().flatten().map(|m| m.result).collect();
        for &a in &ids {
            complete[a] = true;
            for &b in &ids {
                if a != b {
                    adjacency[a].insert(b);
                }
            }
        }
    }
    let results = distinct
        .into_iter()
        .enumerate()
        .map(|(i, result)| CanonicalResult {
            result,
            status: if complete[i] {
                Status::Complete
            } else if admits[i] {
                Status::Partial
            } else {
                Status::Inconsistent
            },
            labelings: labelings[i],
        })
        .collect();
    Ok(Postprocessed {
        results,
        families,
        orientation_classes,
        raw_combinations: combos.len(),
        graph: adjacency
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect(),
    })
}

fn dedup_members(m: &BTreeSet<Member>) -> Vec<Member> {
    let mut seen = BTreeSet::new();
    m.iter()
        .filter(|x| seen.insert(x.result))
        .copied()
        .collect()
}

/// Every rule set of one family: all choices of one member per prototile.
pub fn assemble_rules(problem: &Problem, post: &Postprocessed, family: &Family) -> Vec<RuleSet> {
    let labeled: Vec<Vec<RawResult>> = family
        .members
        .iter()
        .map(|ms| {
            ms.iter()
                .map(|m| toggle(problem, &post.results[m.result].result, m.toggle))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; labeled.len()];
    if labeled.iter().any(Vec::is_empty) {
        return out;
    }
    loop {
        out.push(RuleSet {
            orientation: family.orientation.clone(),
            breakdowns: family.breakdowns.clone(),
            results: idx
                .iter()
                .zip(&labeled)
                .map(|(&i, l)| l[i].clone())
                .collect(),
        });
        let mut p = 0;
        loop {
            if p == idx.len() {
                return out;
            }
            idx[p] += 1;
            if idx[p] < labeled[p].len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

/// The first rule set of a family.
pub fn first_rule(problem: &Problem, post: &Postprocessed, family: &Family) -> Option<RuleSet> {
    let results = family
        .members
        .iter()
        .map(|ms| {
            ms.first()
                .map(|m| toggle(problem, &post.results[m.result].result, m.toggle))
        })
        .collect::<Option<Vec<_>>>()?;
    Some(RuleSet {
        orientation: family.orientation.clone(),
        breakdowns: family.breakdowns.clone(),
        results,
    })
}

/// One application of the substitution to a patch.
pub fn substitute(problem: &Problem, rule: &RuleSet, patch: &[ResultTile]) -> Vec<ResultTile> {
    let lat = &problem.lattice;
    let mut out = Vec::new();
    for t in patch {
        for h in &rule.results[t.proto as usize].tiles {
            let lin = lat.compose(
                &RigidMotion {
                    shift: LatticePoint::ZERO,
                    ..t.motion
                },
                &h.motion,
            );
            let shift = lat
                .apply_linear(&t.motion, &h.motion.shift)
                .add(&problem.scaling.apply(&t.motion.shift));
            out.push(ResultTile {
                proto: h.proto,
                motion: RigidMotion { shift, ..lin },
            });
        }
    }
    out
}

/// A single copy of prototile `p` in canonical position.
pub fn prototile_seed(p: usize) -> Vec<ResultTile> {
    vec![ResultTile {
        proto: p as u32,
        motion: RigidMotion::IDENTITY,
    }]
}

/// `2n` copies of a prototile with a `pi/n` angle at its first vertex, alternately
/// reflected, filling a full turn around the origin.
pub fn star_seed(problem: &Problem) -> Result<Vec<ResultTile>> {
    let p = problem
        .protos
        .iter()
        .position(|t| t.angles()[0] == 1)
        .ok_or_else(|| Error::Config("the star seed needs a prototile with angle pi/n".into()))?;
    let n = problem.n();
    Ok((0..2 * n)
        .map(|m| {
            let motion = if m % 2 == 0 {
                RigidMotion::rotation(m)
            } else {
                RigidMotion {
                    rot: (m + 1) % (2 * n),
                    flip: true,
                    shift: LatticePoint::ZERO,
                }
            };
            ResultTile {
                proto: p as u32,
                motion,
            }
        })
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchCheck {
    pub tiles: usize,
    pub census: Vec<u64>,
    pub overlaps: Vec<(usize, usize)>,
    /// Pairs meeting along part of an edge or at a vertex inside an edge.
    pub not_edge_to_edge: Vec<(usize, usize)>,
    pub arrow_conflicts: Vec<(usize, usize)>,
}

impl PatchCheck {
    pub fn ok(&self) -> bool {
        self.overlaps.is_empty()
            && self.not_edge_to_edge.is_empty()
            && self.arrow_conflicts.is_empty()
    }

    pub fn first_problem(&self) -> Option<String> {
        if let Some((a, b)) = self.overlaps.first() {
            return Some(format!("tiles {a} and {b} overlap"));
        }
        if let Some((a, b)) = self.not_edge_to_edge.first() {
            return Some(format!("tiles {a} and {b} do not meet edge to edge"));
        }
        self.arrow_conflicts
            .first()
            .map(|(a, b)| format!("tiles {a} and {b} disagree on a shared arrow"))
    }
}

fn arrow_origin(v: &[LatticePoint; 3], i: usize, reversed: bool) -> LatticePoint {
    if reversed {
        v[(i + 2) % 3]
    } else {
        v[(i + 1) % 3]
    }
}

/// Pairwise overlap, edge-to-edge and arrow checks on a patch. Uses only the geometric
/// predicates, not any bookkeeping from the search.
pub fn check_patch(
    problem: &Problem,
    tiles: &[ResultTile],
    orientation: Option<&[bool]>,
) -> PatchCheck {
    let lat = &problem.lattice;
    let pts: Vec<[LatticePoint; 3]> = tiles
        .iter()
        .map(|t| problem.tile_vertices(t.proto as usize, &t.motion))
        .collect();
    let verts: Vec<[Vertex; 3]> = pts.iter().map(|v| v.map(|p| lat.vertex(&p))).collect();
    let boxes: Vec<[f64; 4]> = verts.iter().map(|v| geometry::bbox(v)).collect();
    let mut order: Vec<usize> = (0..tiles.len()).collect();
    order.sort_by(|&a, &b| boxes[a][0].total_cmp(&boxes[b][0]));
    let mut census = vec![0u64; problem.num_protos()];
    for t in tiles {
        census[t.proto as usize] += 1;
    }
    let mut check = PatchCheck {
        tiles: tiles.len(),
        census,
        ..Default::default()
    };
    let eps = 1e-6;
    for (oi, &a) in order.iter().enumerate() {
        for &b in &order[oi + 1..] {
            if boxes[b][0] > boxes[a][2] + eps {
                break;
            }
            if boxes[b][1] > boxes[a][3] + eps || boxes[a][1] > boxes[b][3] + eps {
                continue;
            }
            let pair = (a.min(b), a.max(b));
            if lat.interiors_overlap_v(&verts[a], &verts[b]) {
                check.overlaps.push(pair);
                continue;
            }
            let mut bad = false;
            for i in 0..3 {
                for j in 0..3 {
                    let ea = (&verts[a][(i + 1) % 3], &verts[a][(i + 2) % 3]);
                    let eb = (&verts[b][(j + 1) % 3], &verts[b][(j + 2) % 3]);
                    match lat.segment_relation_v(ea, eb) {
                        SegmentRelation::Equal => {
                            if let Some(x) = orientation {
                                let (pa, pb) = (tiles[a].proto as usize, tiles[b].proto as usize);
                                let oa = arrow_origin(&pts[a], i, x[Problem::var(pa, i)]);
                                let ob = arrow_origin(&pts[b], j, x[Problem::var(pb, j)]);
                                if oa != ob {
                                    check.arrow_conflicts.push(pair);
                                }
                            }
                        }
                        SegmentRelation::Disjoint | SegmentRelation::SharedEndpointOnly => {}
                        _ => bad = true,
                    }
                }
            }
            if bad {
                check.not_edge_to_edge.push(pair);
            }
        }
    }
    check.overlaps.sort();
    check.not_edge_to_edge.sort();
    check.arrow_conflicts.sort();
    check
}

fn area_of(problem: &Problem, census: &[u64]) -> FieldElement {
    let d = problem.field().degree();
    census
        .iter()
        .zip(&problem.areas)
        .fold(FieldElement::zero(d), |acc, (&c, a)| {
            acc.add(&a.scale(&BigRational::from_integer(BigInt::from(c))))
        })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultCheck {
    pub patch: PatchCheck,
    pub census_matches: bool,
    pub area_matches: bool,
    pub inside_region: bool,
}

impl ResultCheck {
    pub fn ok(&self) -> bool {
        self.patch.ok() && self.census_matches && self.area_matches && self.inside_region
    }
}

/// Checks that a raw result tiles `lambda t0` exactly, edge to edge.
pub fn verify_result(
    problem: &Problem,
    result: &RawResult,
    orientation: Option<&[bool]>,
) -> Result<ResultCheck> {
    let t0 = result.t0 as usize;
    let patch = check_patch(problem, &result.tiles, orientation);
    let want: Vec<u64> = problem
        .substitution_matrix()?
        .column(t0)
        .into_iter()
        .map(|c| c as u64)
        .collect();
    let region = problem.inflated(t0).vertices;
    let inside_region = result.tiles.iter().all(|t| {
        problem
            .tile_vertices(t.proto as usize, &t.motion)
            .iter()
            .all(|v| problem.lattice.point_in_closed_triangle(v, &region))
    });
    let field = problem.field();
    let target = field.mul(&field.square(problem.lambda.value()), &problem.areas[t0]);
    Ok(ResultCheck {
        census_matches: patch.census == want,
        area_matches: area_of(problem, &patch.census) == target,
        inside_region,
        patch,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: u32,
    pub check: PatchCheck,
    pub expected_census: Vec<u64>,
    pub area_matches: bool,
}

impl LevelReport {
    pub fn ok(&self) -> bool {
        self.check.ok() && self.check.census == self.expected_census && self.area_matches
    }
}

/// `sigma^k(seed)` with a report for every level `0..=k`.
pub fn apply_and_verify(
    problem: &Problem,
    rule: &RuleSet,
    seed: &[ResultTile],
    k: u32,
) -> Result<(Vec<ResultTile>, Vec<LevelReport>)> {
    if rule.results.len() != problem.num_protos() {
        return Err(Error::Config(
            "rule set does not cover every prototile".into(),
        ));
    }
    let m = problem.substitution_matrix()?;
    let field = problem.field();
    let lambda_sq = field.square(problem.lambda.value());
    let mut census0 = vec![0i64; problem.num_protos()];
    for t in seed {
        census0[t.proto as usize] += 1;
    }
    let mut area = area_of(
        problem,
        &census0.iter().map(|&c| c as u64).collect::<Vec<_>>(),
    );
    let mut patch = seed.to_vec();
    let mut reports = Vec::new();
    for level in 0..=k {
        if level > 0 {
            patch = substitute(problem, rule, &patch);
            area = field.mul(&area, &lambda_sq);
        }
        let expected = mat_vec(&m.pow(level), &census0);
        let check = check_patch(problem, &patch, Some(&rule.orientation));
        let area_matches = area_of(problem, &check.census) == area;
        reports.push(LevelReport {
            level,
            check,
            expected_census: expected,
            area_matches,
        });
    }
    Ok((patch, reports))
}

fn mat_vec(m: &IntMatrix, v: &[i64]) -> Vec<u64> {
    (0..m.size())
        .map(|i| {
            (0..m.size())
                .map(|j| m.get(i, j) * v[j])
                .sum::<i64>()
                .max(0) as u64
        })
        .collect()
}

/// Whether every pair of edges meeting at a prototile vertex has arrows both towards or
/// both away from it for even angles, and opposite for odd angles.
pub fn vertex_polarity_holds(problem: &Problem, orientation: &[bool]) -> bool {
    (0..problem.num_protos()).all(|p| {
        let k = problem.protos[p].angles();
        (0..3).all(|v| {
            // Counterclockwise, edge v+2 leaves V_v and edge v+1 arrives at it.
            let e_out = (v + 2) % 3;
            let e_in = (v + 1) % 3;
            let away_out = !orientation[Problem::var(p, e_out)];
            let away_in = orientation[Problem::var(p, e_in)];
            (away_out == away_in) == k[v].is_multiple_of(2)
        })
    })
}

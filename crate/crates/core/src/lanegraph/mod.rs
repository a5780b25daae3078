//! Static road map: lanes with geometry and topology, right-of-way rules,
//! lane matching, and the precomputed corridor overlaps between lanes.

mod relation;
mod route;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

pub use relation::{conflict_span, route_relation, ConflictArea, ConflictSpan, RelationKind, RouteRelation};
pub use route::{curvature_profile, enumerate_routes, features_along_route, RouteFeatures, RoutePath, RoutePose};

use crate::geometry::{Aabb, ConvexPolygon, Polyline, Vec2};
use crate::kinematics::KinematicState;
use crate::math;

/// Successor lanes must start within this distance of the predecessor's end.
pub const CONTINUITY_TOLERANCE: f64 = 0.1;
/// Extra lateral slack beyond half the lane width when matching agents.
pub const MATCH_SLACK: f64 = 1.0;
/// Corridor overlaps smaller than this are treated as touching, not overlapping.
const MIN_CONFLICT_AREA: f64 = 0.05;
/// Curvature samples with a radius above this count as straight.
const STRAIGHT_RADIUS: f64 = 1e4;
const CURVATURE_WINDOW: f64 = 5.0;
const CURVATURE_STEP: f64 = 1.0;

/// Dense index of a lane inside a [`LaneGraph`]. Lanes are stored sorted by
/// id, so index order equals lexicographic id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneIdx(pub u32);

impl LaneIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Raw lane description as found in a map file.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LaneSpec {
    pub id: String,
    pub centerline: Vec<[f64; 2]>,
    pub width: f64,
    /// `(start arclength, limit)` pairs.
    pub speed_limits: Vec<[f64; 2]>,
    pub yield_line: Option<f64>,
    pub successors: Vec<String>,
}

/// Raw map description; `right_of_way` holds `[priority_lane, yielding_lane]`.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MapSpec {
    pub lanes: Vec<LaneSpec>,
    pub right_of_way: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("lane {lane}: {reason}")]
    InvalidLane { lane: String, reason: String },
    #[error("duplicate lane id {0}")]
    DuplicateLane(String),
    #[error("lane {lane}: successor {successor} does not exist")]
    MissingSuccessor { lane: String, successor: String },
    #[error("lane {lane}: successor {successor} starts {gap:.3} m away from its end")]
    Discontinuous { lane: String, successor: String, gap: f64 },
    #[error("right-of-way rule references unknown lane {0}")]
    UnknownRuleLane(String),
    #[error("right-of-way between {0} and {1} is given in both directions")]
    ContradictoryRule(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedLimit {
    pub start: f64,
    pub limit: f64,
}

#[derive(Debug, Clone)]
pub struct Lane {
    pub id: String,
    pub centerline: Polyline,
    pub width: f64,
    pub speed_limits: Vec<SpeedLimit>,
    pub yield_line: Option<f64>,
    pub successors: Vec<LaneIdx>,
    pub predecessors: Vec<LaneIdx>,
    quads: Vec<ConvexPolygon>,
    bounds: Aabb,
    /// Signed curvature samples `(s, kappa)` every metre; zero when straight.
    curvature: Vec<(f64, f64)>,
}

impl Lane {
    pub fn length(&self) -> f64 {
        self.centerline.length()
    }

    /// Speed limit in effect at arclength `s`.
    pub fn speed_limit_at(&self, s: f64) -> f64 {
        let mut current = self.speed_limits[0].limit;
        for sl in &self.speed_limits {
            if sl.start <= s {
                current = sl.limit;
            } else {
                break;
            }
        }
        current
    }

    pub fn corridor_quads(&self) -> &[ConvexPolygon] {
        &self.quads
    }

    pub fn corridor_outline(&self) -> Vec<Vec2> {
        self.centerline.corridor_outline(0.5 * self.width)
    }

    /// Signed curvature samples along the lane.
    pub fn curvature_samples(&self) -> &[(f64, f64)] {
        &self.curvature
    }

    /// Signed curvature at the sample nearest to `s`.
    pub fn curvature_at(&self, s: f64) -> f64 {
        if self.curvature.is_empty() {
            return 0.0;
        }
        let k = libm::round(s / CURVATURE_STEP).clamp(0.0, (self.curvature.len() - 1) as f64) as usize;
        self.curvature[k].1
    }
}

/// Precomputed overlap of two lane corridors.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneConflict {
    pub merge: bool,
    /// Entry/exit arclength on the first lane of the pair.
    pub first: (f64, f64),
    /// Entry/exit arclength on the second lane of the pair.
    pub second: (f64, f64),
    pub pieces: Vec<ConvexPolygon>,
}

impl LaneConflict {
    fn swapped(&self) -> Self {
        Self { merge: self.merge, first: self.second, second: self.first, pieces: self.pieces.clone() }
    }
}

/// Immutable road network.
#[derive(Debug, Clone)]
pub struct LaneGraph {
    lanes: Vec<Lane>,
    rules: BTreeSet<(LaneIdx, LaneIdx)>,
    conflicts: Vec<Option<LaneConflict>>,
}

impl LaneGraph {
    pub fn from_spec(spec: &MapSpec) -> Result<Self, MapError> {
        let mut order: Vec<&LaneSpec> = spec.lanes.iter().collect();
        order.sort_by(|a, b| a.id.cmp(&b.id));
        for w in order.windows(2) {
            if w[0].id == w[1].id {
                return Err(MapError::DuplicateLane(w[0].id.clone()));
            }
        }
        let find = |id: &str| order.binary_search_by(|l| l.id.as_str().cmp(id)).ok().map(|i| LaneIdx(i as u32));

        let mut lanes = Vec::with_capacity(order.len());
        for ls in &order {
            lanes.push(build_lane(ls)?);
        }
        for (i, ls) in order.iter().enumerate() {
            let mut succ = Vec::with_capacity(ls.successors.len());
            for sid in &ls.successors {
                let j = find(sid).ok_or_else(|| MapError::MissingSuccessor {
                    lane: ls.id.clone(),
                    successor: sid.clone(),
                })?;
                let gap = lanes[i].centerline.end().dist(lanes[j.index()].centerline.start());
                if gap > CONTINUITY_TOLERANCE {
                    return Err(MapError::Discontinuous { lane: ls.id.clone(), successor: sid.clone(), gap });
                }
                if !succ.contains(&j) {
                    succ.push(j);
                }
            }
            succ.sort();
            lanes[i].successors = succ;
        }
        for i in 0..lanes.len() {
            for j in lanes[i].successors.clone() {
                lanes[j.index()].predecessors.push(LaneIdx(i as u32));
            }
        }

        let mut rules = BTreeSet::new();
        for [pri, yld] in &spec.right_of_way {
            let p = find(pri).ok_or_else(|| MapError::UnknownRuleLane(pri.clone()))?;
            let y = find(yld).ok_or_else(|| MapError::UnknownRuleLane(yld.clone()))?;
            if p == y || rules.contains(&(y, p)) {
                return Err(MapError::ContradictoryRule(pri.clone(), yld.clone()));
            }
            rules.insert((p, y));
        }

        let mut graph = LaneGraph { lanes, rules, conflicts: Vec::new() };
        graph.conflicts = graph.compute_conflicts();
        Ok(graph)
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn lane(&self, idx: LaneIdx) -> &Lane {
        &self.lanes[idx.index()]
    }

    pub fn len(&self) -> usize {
        self.lanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    pub fn lane_by_id(&self, id: &str) -> Option<LaneIdx> {
        self.lanes.binary_search_by(|l| l.id.as_str().cmp(id)).ok().map(|i| LaneIdx(i as u32))
    }

    pub fn successors(&self, idx: LaneIdx) -> &[LaneIdx] {
        &self.lane(idx).successors
    }

    pub fn successor_edge_count(&self) -> usize {
        self.lanes.iter().map(|l| l.successors.len()).sum()
    }

    /// `Some(true)` if `a` has priority over `b`, `Some(false)` if `b` has
    /// priority over `a`, `None` without a rule.
    pub fn priority(&self, a: LaneIdx, b: LaneIdx) -> Option<bool> {
        if self.rules.contains(&(a, b)) {
            Some(true)
        } else if self.rules.contains(&(b, a)) {
            Some(false)
        } else {
            None
        }
    }

    pub fn right_of_way_rules(&self) -> impl Iterator<Item = (LaneIdx, LaneIdx)> + '_ {
        self.rules.iter().copied()
    }

    /// Corridor overlap between two lanes, oriented so that `first` refers to `a`.
    pub fn lane_conflict(&self, a: LaneIdx, b: LaneIdx) -> Option<&LaneConflict> {
        self.conflicts[a.index() * self.lanes.len() + b.index()].as_ref()
    }

    /// All lanes whose corridor (plus slack) contains the agent and whose
    /// heading is within a quarter turn, sorted by lateral distance.
    pub fn match_lane(&self, state: &KinematicState) -> Vec<(LaneIdx, f64)> {
        let p = Vec2::new(state.x, state.y);
        let mut hits: Vec<(f64, LaneIdx, f64)> = Vec::new();
        for (i, lane) in self.lanes.iter().enumerate() {
            let b = lane.bounds;
            let slack = 0.5 * lane.width + MATCH_SLACK;
            if p.x < b.min.x - slack || p.x > b.max.x + slack || p.y < b.min.y - slack || p.y > b.max.y + slack {
                continue;
            }
            let proj = lane.centerline.project(p);
            if proj.overshoot != 0.0 || proj.distance > slack {
                continue;
            }
            if math::wrap_angle(state.theta - proj.heading).abs() >= FRAC_PI_2 {
                continue;
            }
            hits.push((proj.distance, LaneIdx(i as u32), proj.s));
        }
        hits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        hits.into_iter().map(|(_, l, s)| (l, s)).collect()
    }

    fn related_without_conflict(&self, a: LaneIdx, b: LaneIdx) -> bool {
        let la = self.lane(a);
        let lb = self.lane(b);
        // Consecutive lanes touch at their caps.
        if la.successors.contains(&b) || lb.successors.contains(&a) {
            return true;
        }
        // Lanes leaving a common predecessor diverge.
        la.predecessors.iter().any(|p| lb.predecessors.contains(p))
    }

    fn compute_conflicts(&self) -> Vec<Option<LaneConflict>> {
        let n = self.lanes.len();
        let mut table = alloc::vec![None; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (LaneIdx(i as u32), LaneIdx(j as u32));
                if self.related_without_conflict(a, b) {
                    continue;
                }
                let la = &self.lanes[i];
                let lb = &self.lanes[j];
                if !la.bounds.overlaps(&lb.bounds) {
                    continue;
                }
                let mut pieces = Vec::new();
                for qa in &la.quads {
                    let ba = qa.bounds();
                    for qb in &lb.quads {
                        if !ba.overlaps(&qb.bounds()) {
                            continue;
                        }
                        if let Some(piece) = qa.intersect(qb) {
                            pieces.push(piece);
                        }
                    }
                }
                let area: f64 = pieces.iter().map(ConvexPolygon::area).sum();
                if area < MIN_CONFLICT_AREA {
                    continue;
                }
                let span = |lane: &Lane| {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for p in pieces.iter().flat_map(|pc| pc.points.iter()) {
                        let s = lane.centerline.project(*p).s;
                        lo = lo.min(s);
                        hi = hi.max(s);
                    }
                    (lo, hi)
                };
                let merge = la.successors.iter().any(|s| lb.successors.contains(s));
                let first = span(la);
                let second = span(lb);
                if !(first.0 < first.1 && second.0 < second.1) {
                    continue;
                }
                let c = LaneConflict { merge, first, second, pieces };
                table[j * n + i] = Some(c.swapped());
                table[i * n + j] = Some(c);
            }
        }
        table
    }
}

fn invalid(lane: &str, reason: &str) -> MapError {
    MapError::InvalidLane { lane: lane.into(), reason: reason.into() }
}

fn build_lane(ls: &LaneSpec) -> Result<Lane, MapError> {
    let pts: Vec<Vec2> = ls.centerline.iter().map(|p| Vec2::new(p[0], p[1])).collect();
    if pts.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(invalid(&ls.id, "centerline has non-finite coordinates"));
    }
    let centerline = Polyline::new(pts)
        .ok_or_else(|| invalid(&ls.id, "centerline needs at least two distinct consecutive points"))?;
    if !(ls.width > 0.0 && ls.width.is_finite()) {
        return Err(invalid(&ls.id, "width must be positive"));
    }
    if ls.speed_limits.is_empty() {
        return Err(invalid(&ls.id, "at least one speed limit is required"));
    }
    let mut speed_limits = Vec::with_capacity(ls.speed_limits.len());
    let mut last = f64::NEG_INFINITY;
    for [start, limit] in &ls.speed_limits {
        if !(*limit > 0.0 && limit.is_finite()) {
            return Err(invalid(&ls.id, "speed limits must be positive"));
        }
        if !start.is_finite() || *start < last {
            return Err(invalid(&ls.id, "speed limit arclengths must be non-decreasing"));
        }
        last = *start;
        speed_limits.push(SpeedLimit { start: *start, limit: *limit });
    }
    if let Some(y) = ls.yield_line {
        if !(y.is_finite() && y >= 0.0 && y <= centerline.length() + 1e-9) {
            return Err(invalid(&ls.id, "yield line lies outside the lane"));
        }
    }
    let quads = centerline.corridor_quads(0.5 * ls.width);
    let bounds = Aabb::around(&centerline.corridor_outline(0.5 * ls.width));
    let curvature = lane_curvature(&centerline);
    Ok(Lane {
        id: ls.id.clone(),
        centerline,
        width: ls.width,
        speed_limits,
        yield_line: ls.yield_line,
        successors: Vec::new(),
        predecessors: Vec::new(),
        quads,
        bounds,
        curvature,
    })
}

/// Three-point circumradius over a fixed window, sampled every metre. The
/// window is shifted to stay inside the lane near its ends.
fn lane_curvature(line: &Polyline) -> Vec<(f64, f64)> {
    let len = line.length();
    let half = (0.5 * CURVATURE_WINDOW).min(0.5 * len);
    let count = libm::floor(len / CURVATURE_STEP) as usize + 1;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let s = (k as f64 * CURVATURE_STEP).min(len);
        let mid = s.clamp(half, len - half);
        let a = line.point_at(mid - half);
        let b = line.point_at(mid);
        let c = line.point_at(mid + half);
        let kappa = match crate::geometry::circumradius(a, b, c) {
            Some(r) if r < STRAIGHT_RADIUS => {
                let sign = if (b - a).cross(c - b) >= 0.0 { 1.0 } else { -1.0 };
                sign / r
            }
            _ => 0.0,
        };
        out.push((s, kappa));
    }
    out
}

#[cfg(test)]
mod tests;

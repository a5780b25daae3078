use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::{LaneGraph, LaneIdx};
use crate::geometry::Vec2;

/// A sequence of consecutive lanes. Route coordinates start at the
/// beginning of the first lane; `start` is where the agent stood on that
/// lane when the route was generated.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutePath {
    lanes: Vec<LaneIdx>,
    offsets: Vec<f64>,
    length: f64,
    start: f64,
    horizon: f64,
}

/// Position of a point relative to a route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutePose {
    /// Route coordinate of the foot point.
    pub d: f64,
    /// Index into the route's lane list.
    pub lane: usize,
    pub lateral: f64,
    pub distance: f64,
    pub heading: f64,
    /// Non-zero when the point lies before the route start or past its end.
    pub overshoot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteFeatures {
    /// Limit in effect at the agent's position.
    pub speed_limit: f64,
    /// Next change of the limit ahead as `(distance, new limit)`.
    pub next_limit: Option<(f64, f64)>,
    /// Distance to the next yield line ahead.
    pub yield_distance: Option<f64>,
    /// `(distance, radius)` for every curved sample ahead.
    pub curvature: Vec<(f64, f64)>,
}

impl RoutePath {
    /// Builds a route over the given lanes. The caller guarantees that the
    /// lanes are consecutive in `graph`.
    pub fn new(graph: &LaneGraph, lanes: Vec<LaneIdx>, start: f64, horizon: f64) -> Self {
        let mut offsets = Vec::with_capacity(lanes.len());
        let mut acc = 0.0;
        for l in &lanes {
            offsets.push(acc);
            acc += graph.lane(*l).length();
        }
        Self { lanes, offsets, length: acc, start, horizon }
    }

    pub fn lanes(&self) -> &[LaneIdx] {
        &self.lanes
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Length ahead of the generating position.
    pub fn extent(&self) -> f64 {
        self.length - self.start
    }

    pub fn lane_offset(&self, lane: LaneIdx) -> Option<f64> {
        self.lanes.iter().position(|l| *l == lane).map(|k| self.offsets[k])
    }

    /// Index of the lane holding route coordinate `d`, and the arclength on it.
    pub fn lane_at(&self, d: f64) -> (usize, f64) {
        let mut k = 0;
        while k + 1 < self.lanes.len() && self.offsets[k + 1] <= d {
            k += 1;
        }
        (k, d - self.offsets[k])
    }

    /// Nearest-point projection over all lanes of the route.
    pub fn project(&self, graph: &LaneGraph, p: Vec2) -> RoutePose {
        let mut best: Option<RoutePose> = None;
        let last = self.lanes.len() - 1;
        for (k, l) in self.lanes.iter().enumerate() {
            let proj = graph.lane(*l).centerline.project(p);
            if best.is_none_or(|b| proj.distance < b.distance - 1e-9) {
                let overshoot = if (k == 0 && proj.overshoot < 0.0) || (k == last && proj.overshoot > 0.0) {
                    proj.overshoot
                } else {
                    0.0
                };
                best = Some(RoutePose {
                    d: self.offsets[k] + proj.s + overshoot,
                    lane: k,
                    lateral: proj.lateral,
                    distance: proj.distance,
                    heading: proj.heading,
                    overshoot,
                });
            }
        }
        best.unwrap()
    }

    pub fn point_at(&self, graph: &LaneGraph, d: f64) -> Vec2 {
        let (k, s) = self.lane_at(d);
        graph.lane(self.lanes[k]).centerline.point_at(s)
    }

    /// Signed centerline curvature at route coordinate `d`.
    pub fn curvature_at(&self, graph: &LaneGraph, d: f64) -> f64 {
        let (k, s) = self.lane_at(d);
        let lane = graph.lane(self.lanes[k]);
        if s > lane.length() {
            return 0.0;
        }
        lane.curvature_at(s)
    }

    pub fn speed_limit_at(&self, graph: &LaneGraph, d: f64) -> f64 {
        let (k, s) = self.lane_at(d);
        graph.lane(self.lanes[k]).speed_limit_at(s)
    }

    /// `(distance, radius)` of curved samples between `d` and `d + max_ahead`.
    pub fn curvature_ahead<'a>(
        &'a self,
        graph: &'a LaneGraph,
        d: f64,
        max_ahead: f64,
    ) -> impl Iterator<Item = (f64, f64)> + 'a {
        self.lanes.iter().zip(self.offsets.iter()).flat_map(move |(l, off)| {
            graph.lane(*l).curvature_samples().iter().filter_map(move |(s, kappa)| {
                let dist = off + s - d;
                (*kappa != 0.0 && dist >= 0.0 && dist <= max_ahead).then(|| (dist, 1.0 / kappa.abs()))
            })
        })
    }

    /// Distance from `d` to the next yield line ahead (within `max_ahead`).
    pub fn yield_ahead(&self, graph: &LaneGraph, d: f64, max_ahead: f64) -> Option<f64> {
        self.lanes.iter().zip(self.offsets.iter()).find_map(|(l, off)| {
            graph
                .lane(*l)
                .yield_line
                .map(|y| off + y - d)
                .filter(|dist| *dist >= 0.0 && *dist <= max_ahead)
        })
    }

    /// Next change of speed limit ahead of `d`, as `(distance, limit)`.
    pub fn next_limit_change(&self, graph: &LaneGraph, d: f64) -> Option<(f64, f64)> {
        let mut current = self.speed_limit_at(graph, d);
        for (l, off) in self.lanes.iter().zip(self.offsets.iter()) {
            let lane = graph.lane(*l);
            for (i, sl) in lane.speed_limits.iter().enumerate() {
                // The first segment governs the lane from its start.
                let at = if i == 0 { *off } else { off + sl.start };
                if at <= d || at > self.length {
                    continue;
                }
                if sl.limit != current {
                    return Some((at - d, sl.limit));
                }
                current = sl.limit;
            }
        }
        None
    }

    /// Whether the two routes imply the same decisions: once aligned on
    /// their first common lane, they agree on every lane both traverse.
    pub fn consistent_with(&self, other: &RoutePath) -> bool {
        let Some((i, j)) = first_alignment(&self.lanes, &other.lanes) else {
            return false;
        };
        self.lanes[i..].iter().zip(other.lanes[j..].iter()).all(|(a, b)| a == b)
    }

    /// Appends the lanes of `other` beyond the overlap. Both routes must be
    /// [`consistent_with`](Self::consistent_with) each other.
    pub fn extended_by(&self, graph: &LaneGraph, other: &RoutePath) -> RoutePath {
        let Some((i, j)) = first_alignment(&self.lanes, &other.lanes) else {
            return self.clone();
        };
        let overlap = (self.lanes.len() - i).min(other.lanes.len() - j);
        let mut lanes = self.lanes.clone();
        lanes.extend_from_slice(&other.lanes[j + overlap..]);
        RoutePath::new(graph, lanes, self.start, self.horizon)
    }

    /// Drops lanes before index `k`, shifting coordinates accordingly.
    pub fn trimmed(&self, graph: &LaneGraph, k: usize, start: f64) -> RoutePath {
        RoutePath::new(graph, self.lanes[k..].to_vec(), start, self.horizon)
    }
}

fn first_alignment(a: &[LaneIdx], b: &[LaneIdx]) -> Option<(usize, usize)> {
    if let Some(j) = b.iter().position(|l| *l == a[0]) {
        return Some((0, j));
    }
    a.iter().position(|l| *l == b[0]).map(|i| (i, 0))
}

/// Breadth-first expansion of successor chains from `start` until each chain
/// covers `horizon` metres ahead or ends at a terminal lane. Results are in
/// lexicographic order of their lane sequences.
pub fn enumerate_routes(graph: &LaneGraph, start: (LaneIdx, f64), horizon: f64) -> Vec<RoutePath> {
    let (lane, s0) = start;
    let mut done: Vec<Vec<LaneIdx>> = Vec::new();
    let mut queue: VecDeque<(Vec<LaneIdx>, f64)> = VecDeque::new();
    queue.push_back((alloc::vec![lane], graph.lane(lane).length() - s0));
    while let Some((chain, covered)) = queue.pop_front() {
        let last = *chain.last().unwrap();
        let succ = graph.successors(last);
        if covered >= horizon || succ.is_empty() {
            done.push(chain);
            continue;
        }
        for s in succ {
            let mut next = chain.clone();
            next.push(*s);
            queue.push_back((next, covered + graph.lane(*s).length()));
        }
    }
    done.sort();
    done.dedup();
    done.into_iter().map(|lanes| RoutePath::new(graph, lanes, s0, horizon)).collect()
}

/// Radius samples every metre along the route as `(route coordinate, radius)`;
/// straight samples carry `f64::INFINITY`.
pub fn curvature_profile(route: &RoutePath, graph: &LaneGraph) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (l, off) in route.lanes.iter().zip(route.offsets.iter()) {
        for (s, kappa) in graph.lane(*l).curvature_samples() {
            let r = if *kappa == 0.0 { f64::INFINITY } else { 1.0 / kappa.abs() };
            out.push((off + s, r));
        }
    }
    out
}

/// Map features ahead of route coordinate `d`, limited to the route extent.
pub fn features_along_route(route: &RoutePath, d: f64, graph: &LaneGraph) -> RouteFeatures {
    let ahead = route.length - d;
    RouteFeatures {
        speed_limit: route.speed_limit_at(graph, d),
        next_limit: route.next_limit_change(graph, d),
        yield_distance: route.yield_ahead(graph, d, ahead),
        curvature: route.curvature_ahead(graph, d, ahead).collect(),
    }
}

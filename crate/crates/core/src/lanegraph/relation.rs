use alloc::vec::Vec;

use super::{LaneGraph, RoutePath};
use crate::geometry::{ConvexPolygon, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RelationKind {
    Merge,
    Diverge,
    Cross,
    Identical,
    None,
}

/// Entry/exit route coordinates of a conflict area on both routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictSpan {
    pub first: (f64, f64),
    pub second: (f64, f64),
    /// `Some(true)` when the first route has right of way on every lane pair
    /// forming the area, `Some(false)` when the second route has it, `None`
    /// when rules are missing or mixed.
    pub first_priority: Option<bool>,
}

impl ConflictSpan {
    pub fn swapped(&self) -> Self {
        Self { first: self.second, second: self.first, first_priority: self.first_priority.map(|p| !p) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConflictArea {
    pub span: ConflictSpan,
    /// Convex pieces whose union is the overlap of both corridors.
    pub footprint: Vec<ConvexPolygon>,
}

impl ConflictArea {
    pub fn area(&self) -> f64 {
        self.footprint.iter().map(ConvexPolygon::area).sum()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.footprint.iter().any(|pc| pc.contains(p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteRelation {
    pub kind: RelationKind,
    pub conflict: Option<ConflictArea>,
}

#[derive(Default)]
struct PriorityAcc {
    seen: bool,
    value: Option<bool>,
}

impl PriorityAcc {
    fn push(&mut self, p: Option<bool>) {
        if !self.seen {
            self.seen = true;
            self.value = p;
        } else if self.value != p {
            self.value = None;
        }
    }
}

/// Classifies a pair of routes and, for merges and crossings, computes the
/// conflict area in both route coordinate systems.
pub fn route_relation(a: &RoutePath, b: &RoutePath, graph: &LaneGraph) -> RouteRelation {
    let (kind, span, pieces) = relate(a, b, graph, true);
    RouteRelation { kind, conflict: span.map(|span| ConflictArea { span, footprint: pieces }) }
}

/// Like [`route_relation`] but skips collecting the footprint.
pub fn conflict_span(a: &RoutePath, b: &RoutePath, graph: &LaneGraph) -> (RelationKind, Option<ConflictSpan>) {
    let (kind, span, _) = relate(a, b, graph, false);
    (kind, span)
}

fn relate(
    a: &RoutePath,
    b: &RoutePath,
    graph: &LaneGraph,
    collect: bool,
) -> (RelationKind, Option<ConflictSpan>, Vec<ConvexPolygon>) {
    let la = a.lanes();
    let lb = b.lanes();
    if la == lb {
        return (RelationKind::Identical, None, Vec::new());
    }

    let shared = la.iter().enumerate().find_map(|(i, l)| lb.iter().position(|m| m == l).map(|j| (i, j)));
    let merge = matches!(shared, Some((i, j)) if i > 0 && j > 0 && la[i - 1] != lb[j - 1]);

    let mut first = (f64::INFINITY, f64::NEG_INFINITY);
    let mut second = (f64::INFINITY, f64::NEG_INFINITY);
    let mut prio = PriorityAcc::default();
    let mut pieces = Vec::new();
    for (ka, x) in la.iter().enumerate() {
        for (kb, y) in lb.iter().enumerate() {
            if x == y {
                continue;
            }
            let Some(c) = graph.lane_conflict(*x, *y) else {
                continue;
            };
            let (oa, ob) = (a.offsets()[ka], b.offsets()[kb]);
            first.0 = first.0.min(oa + c.first.0);
            first.1 = first.1.max(oa + c.first.1);
            second.0 = second.0.min(ob + c.second.0);
            second.1 = second.1.max(ob + c.second.1);
            prio.push(graph.priority(*x, *y));
            if collect {
                pieces.extend(c.pieces.iter().cloned());
            }
        }
    }
    let mut found = first.0 < first.1;

    if merge && !found {
        // Pre-merge lanes never overlap: use the head of the shared lane.
        let (i, j) = shared.unwrap();
        let lane = graph.lane(la[i]);
        let depth = lane.length().min(2.0 * lane.width);
        first = (a.offsets()[i], a.offsets()[i] + depth);
        second = (b.offsets()[j], b.offsets()[j] + depth);
        prio.push(graph.priority(la[i - 1], lb[j - 1]));
        if collect {
            let mut acc = 0.0;
            for (q, seg) in lane.corridor_quads().iter().zip(lane.centerline.points().windows(2)) {
                if acc >= depth {
                    break;
                }
                pieces.push(q.clone());
                acc += seg[0].dist(seg[1]);
            }
        }
        found = true;
    }

    let span = found.then_some(ConflictSpan { first, second, first_priority: prio.value });
    let kind = if merge {
        RelationKind::Merge
    } else if found {
        RelationKind::Cross
    } else if let Some((i, j)) = shared {
        if la[i..].iter().zip(lb[j..].iter()).all(|(x, y)| x == y) {
            RelationKind::Identical
        } else {
            RelationKind::Diverge
        }
    } else {
        RelationKind::None
    };
    (kind, span, pieces)
}

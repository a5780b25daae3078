//! Route and maneuver intentions: priors, matching across time steps, and
//! the pairwise passing-order hypotheses at conflict areas.

use alloc::vec::Vec;

use crate::behavior::PassingOrder;
use crate::kinematics::{AgentId, KinematicState};
use crate::lanegraph::{conflict_span, ConflictSpan, LaneGraph, RelationKind, RoutePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum IntentError {
    #[error("agent {0} cannot be matched to any lane")]
    Unmappable(AgentId),
}

/// Uniform prior over the candidate routes of `agent`.
pub fn route_prior(agent: AgentId, candidates: &[RoutePath]) -> Result<Vec<f64>, IntentError> {
    if candidates.is_empty() {
        return Err(IntentError::Unmappable(agent));
    }
    let p = 1.0 / candidates.len() as f64;
    Ok(alloc::vec![p; candidates.len()])
}

/// Transition of a route hypothesis onto a freshly enumerated candidate set:
/// uniform over the consistent candidates, or uniform over all of them when
/// none is consistent.
pub fn match_route(old: &RoutePath, candidates: &[RoutePath]) -> Vec<f64> {
    uniform_over(candidates.iter().map(|c| old.consistent_with(c)).collect())
}

fn uniform_over(hits: Vec<bool>) -> Vec<f64> {
    let n = hits.iter().filter(|h| **h).count();
    if n == 0 {
        let p = if hits.is_empty() { 0.0 } else { 1.0 / hits.len() as f64 };
        return alloc::vec![p; hits.len()];
    }
    let p = 1.0 / n as f64;
    hits.into_iter().map(|h| if h { p } else { 0.0 }).collect()
}

/// Passing order relative to every potentially conflicting agent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ManeuverIntention {
    relations: Vec<(AgentId, PassingOrder)>,
}

impl ManeuverIntention {
    pub fn new(mut relations: Vec<(AgentId, PassingOrder)>) -> Self {
        relations.sort_by_key(|r| r.0);
        relations.dedup_by_key(|r| r.0);
        Self { relations }
    }

    pub fn relations(&self) -> &[(AgentId, PassingOrder)] {
        &self.relations
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn order(&self, other: AgentId) -> Option<PassingOrder> {
        self.relations.binary_search_by_key(&other, |r| r.0).ok().map(|k| self.relations[k].1)
    }

    /// No pair present in both intentions has contradicting orders.
    pub fn consistent_with(&self, other: &ManeuverIntention) -> bool {
        self.relations.iter().all(|(id, o)| other.order(*id).is_none_or(|p| p == *o))
    }
}

/// Transition of a maneuver onto a new maneuver set.
pub fn match_maneuver(old: &ManeuverIntention, candidates: &[ManeuverIntention]) -> Vec<f64> {
    uniform_over(candidates.iter().map(|c| old.consistent_with(c)).collect())
}

/// Another agent as seen by the one being modelled: its current state and
/// the routes it may follow.
#[derive(Debug, Clone, Copy)]
pub struct AgentView<'a> {
    pub id: AgentId,
    pub state: KinematicState,
    pub candidates: &'a [RoutePath],
}

/// One conflict area between the own route and a route hypothesis of the
/// other agent. Distances are measured from the respective agent centres
/// along their routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaConflict {
    pub candidate: usize,
    pub kind: RelationKind,
    pub span: ConflictSpan,
    pub self_entry: f64,
    pub self_exit: f64,
    pub other_entry: f64,
    pub other_exit: f64,
    pub other_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConflict {
    pub other: AgentId,
    pub areas: Vec<AreaConflict>,
    /// The own route has right of way on every area.
    pub self_priority: bool,
}

/// Conflicts of `self_route` with every route hypothesis of each other
/// agent. Areas already left by either agent (rear bumper past the exit)
/// are dropped; agents without a remaining area are omitted.
pub fn potential_conflicts(
    self_state: &KinematicState,
    self_route: &RoutePath,
    others: &[AgentView<'_>],
    graph: &LaneGraph,
    vehicle_length: f64,
) -> Vec<PotentialConflict> {
    let half = 0.5 * vehicle_length;
    let d_self = self_route.project(graph, self_state.position()).d;
    let mut out = Vec::new();
    for other in others {
        let mut areas = Vec::new();
        for (k, cand) in other.candidates.iter().enumerate() {
            let (kind, Some(span)) = conflict_span(self_route, cand, graph) else {
                continue;
            };
            let d_other = cand.project(graph, other.state.position()).d;
            let area = AreaConflict {
                candidate: k,
                kind,
                span,
                self_entry: span.first.0 - d_self,
                self_exit: span.first.1 - d_self,
                other_entry: span.second.0 - d_other,
                other_exit: span.second.1 - d_other,
                other_v: other.state.v,
            };
            if area.self_exit + half <= 0.0 || area.other_exit + half <= 0.0 {
                continue;
            }
            areas.push(area);
        }
        if !areas.is_empty() {
            let self_priority = areas.iter().all(|a| a.span.first_priority == Some(true));
            out.push(PotentialConflict { other: other.id, areas, self_priority });
        }
    }
    out
}

/// Kinematic plausibility limits used to prune maneuvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruningLimits {
    pub accel_max: f64,
    pub time_gap: f64,
    pub vehicle_length: f64,
    pub standing_speed: f64,
}

/// Time to cover `dist` from speed `v` accelerating at `a`.
fn time_to_cover(v: f64, a: f64, dist: f64) -> f64 {
    if dist <= 0.0 {
        return 0.0;
    }
    (-v + crate::math::sqrt(v * v + 2.0 * a * dist)) / a
}

/// Orders that remain plausible for one pair.
fn plausible_orders(conflict: &PotentialConflict, self_v: f64, limits: &PruningLimits) -> (bool, bool) {
    let half = 0.5 * limits.vehicle_length;
    let mut self_first = true;
    let mut other_first = true;
    for a in &conflict.areas {
        let other_inside = a.other_entry - half <= 0.0;
        if other_inside {
            self_first = false;
        } else if a.other_v > limits.standing_speed {
            let t_other = (a.other_entry - half) / a.other_v - limits.time_gap;
            if time_to_cover(self_v, limits.accel_max, a.self_exit + half) > t_other {
                self_first = false;
            }
        }
        if a.self_entry - half <= 0.0 {
            other_first = false;
        }
    }
    if !self_first && !other_first {
        return (true, true);
    }
    (self_first, other_first)
}

/// Cross product of passing orders over all conflicting agents. Pairs where
/// the agent has priority are fixed to self-first; with `branching`
/// disabled, every yielding pair is fixed to other-first. `limits` enables
/// plausibility pruning.
pub fn enumerate_maneuvers(
    conflicts: &[PotentialConflict],
    self_v: f64,
    branching: bool,
    limits: Option<&PruningLimits>,
) -> Vec<ManeuverIntention> {
    let mut options: Vec<(AgentId, Vec<PassingOrder>)> = Vec::with_capacity(conflicts.len());
    for c in conflicts {
        let orders = if c.self_priority {
            alloc::vec![PassingOrder::SelfFirst]
        } else if !branching {
            alloc::vec![PassingOrder::OtherFirst]
        } else {
            let (sf, of) = limits.map_or((true, true), |l| plausible_orders(c, self_v, l));
            let mut v = Vec::with_capacity(2);
            if sf {
                v.push(PassingOrder::SelfFirst);
            }
            if of {
                v.push(PassingOrder::OtherFirst);
            }
            v
        };
        options.push((c.other, orders));
    }
    options.sort_by_key(|o| o.0);

    let mut out: Vec<Vec<(AgentId, PassingOrder)>> = alloc::vec![Vec::new()];
    for (id, orders) in &options {
        let mut next = Vec::with_capacity(out.len() * orders.len());
        for prefix in &out {
            for o in orders {
                let mut m = prefix.clone();
                m.push((*id, *o));
                next.push(m);
            }
        }
        out = next;
    }
    out.into_iter().map(ManeuverIntention::new).collect()
}

#[cfg(test)]
mod tests;

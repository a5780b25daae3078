//! Assembles the action model's inputs for one agent from the joint scene
//! state: lane-relative pose, map features, the preceding agent and the
//! potential conflicts.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_3;

use rand::Rng;

use crate::behavior::{
    self, AccelRange, ConflictApproach, ConflictingAgent, Influence, LanePose, PassingOrder,
};
use crate::config::ModelParams;
use crate::intent::{self, AgentView, ManeuverIntention, PotentialConflict, PruningLimits};
use crate::kinematics::{Action, AgentId, KinematicState};
use crate::lanegraph::{enumerate_routes, LaneGraph, RoutePath, RoutePose};
use crate::math;

/// Every route the agent may follow from where it stands, over all lanes it
/// matches. Empty when the agent is off the map.
pub fn candidate_routes(graph: &LaneGraph, state: &KinematicState, horizon: f64) -> Vec<RoutePath> {
    let mut out: Vec<RoutePath> = Vec::new();
    for (lane, s) in graph.match_lane(state) {
        for r in enumerate_routes(graph, (lane, s), horizon) {
            if !out.iter().any(|o| o.lanes() == r.lanes()) {
                out.push(r);
            }
        }
    }
    out.sort_by(|a, b| a.lanes().cmp(b.lanes()));
    out
}

/// Agent pose relative to its route.
pub fn lane_pose(graph: &LaneGraph, route: &RoutePath, state: &KinematicState) -> (RoutePose, LanePose) {
    let pose = route.project(graph, state.position());
    let lane = LanePose {
        lateral: pose.lateral,
        heading_error: math::wrap_angle(state.theta - pose.heading),
        curvature: if pose.overshoot > 0.0 { 0.0 } else { route.curvature_at(graph, pose.d) },
    };
    (pose, lane)
}

/// Nearest agent ahead on the route, as `(bumper gap, speed along route)`.
pub fn preceding_agent(
    graph: &LaneGraph,
    route: &RoutePath,
    d_self: f64,
    others: &[KinematicState],
    vehicle_length: f64,
) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for o in others {
        let p = route.project(graph, o.position());
        if p.overshoot != 0.0 || p.d <= d_self {
            continue;
        }
        let width = graph.lane(route.lanes()[p.lane]).width;
        let dtheta = math::wrap_angle(o.theta - p.heading);
        if p.distance > 0.5 * width || dtheta.abs() >= FRAC_PI_3 {
            continue;
        }
        let gap = p.d - d_self - vehicle_length;
        if best.is_none_or(|(g, _)| gap < g) {
            best = Some((gap, o.v * math::cos(dtheta)));
        }
    }
    best
}

/// Conflicts of the agent's route with the route hypotheses of the others.
pub fn conflicts_for(
    graph: &LaneGraph,
    state: &KinematicState,
    route: &RoutePath,
    others: &[AgentView<'_>],
    params: &ModelParams,
) -> Vec<PotentialConflict> {
    if !params.interaction.uses_others() {
        return Vec::new();
    }
    intent::potential_conflicts(state, route, others, graph, params.vehicle_length)
}

/// Maneuvers available to the agent given its conflicts.
pub fn maneuvers_for(conflicts: &[PotentialConflict], v: f64, params: &ModelParams) -> Vec<ManeuverIntention> {
    let limits = PruningLimits {
        accel_max: params.sampler.accel_max,
        time_gap: params.sampler.time_gap,
        vehicle_length: params.vehicle_length,
        standing_speed: behavior::STANDING_SPEED,
    };
    intent::enumerate_maneuvers(
        conflicts,
        v,
        params.interaction.branches_maneuvers(),
        params.prune_maneuvers.then_some(&limits),
    )
}

/// Inputs of the action sampler for one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionContext {
    pub range: AccelRange,
    pub pose: LanePose,
}

impl ActionContext {
    pub fn sample<R: Rng + ?Sized>(&self, v: f64, params: &ModelParams, rng: &mut R) -> Action {
        behavior::sample_action(&self.range, &self.pose, v, &params.sampler, rng)
    }

    pub fn nominal(&self, v: f64, params: &ModelParams) -> Action {
        behavior::nominal_action(&self.range, &self.pose, v, &params.sampler)
    }
}

/// Per-influence ranges, combined into the feasible acceleration range.
#[allow(clippy::too_many_arguments)]
pub fn action_context(
    graph: &LaneGraph,
    state: &KinematicState,
    route: &RoutePath,
    maneuver: &ManeuverIntention,
    conflicts: &[PotentialConflict],
    others: &[KinematicState],
    params: &ModelParams,
) -> ActionContext {
    let (pose, lane_pose) = lane_pose(graph, route, state);
    let v = state.v;
    let d = pose.d;
    let half = 0.5 * params.vehicle_length;
    let idm = &params.idm;
    let sampler = &params.sampler;

    let mut ranges: Vec<AccelRange> = Vec::with_capacity(5);
    ranges.push(AccelRange::vehicle_dynamics(sampler));

    let v_lim = route.speed_limit_at(graph, d.clamp(0.0, route.length()));
    let mut speed = behavior::idm_max_accel(v, v_lim, f64::INFINITY, 0.0, idm);
    if let Some((dist, next)) = route.next_limit_change(graph, d) {
        if next < v {
            let a = behavior::reach_speed_accel(v, next, dist, params.dt, idm.decel).unwrap_or(sampler.accel_min);
            speed = speed.min(a);
        }
    }
    ranges.push(AccelRange::upper(speed, Influence::SpeedLimit));

    let ahead = (route.length() - d).max(0.0);
    let curve = behavior::curvature_max_accel(v, route.curvature_ahead(graph, d, ahead), params.dt, idm, sampler);
    ranges.push(AccelRange::upper(curve, Influence::Curvature));

    if params.interaction.uses_others() {
        if let Some((gap, v_p)) = preceding_agent(graph, route, d, others, params.vehicle_length) {
            let a = behavior::idm_max_accel(v, v_lim, gap, v_p, idm);
            ranges.push(AccelRange::upper(a, Influence::Preceding));
        }

        let mut involved: Vec<ConflictingAgent> = Vec::new();
        for c in conflicts.iter().filter(|c| !c.self_priority) {
            let order = maneuver.order(c.other).unwrap_or(PassingOrder::OtherFirst);
            involved.extend(c.areas.iter().map(|a| ConflictingAgent {
                order,
                self_entry: a.self_entry - half,
                self_exit: a.self_exit + half,
                other_entry: a.other_entry - half,
                other_exit: a.other_exit + half,
                other_v: a.other_v,
            }));
        }
        if !involved.is_empty() {
            let approach = ConflictApproach { v, d_yield: route.yield_ahead(graph, d, ahead).map(|y| y - half) };
            ranges.push(behavior::conflict_accel_bounds(&approach, &involved, false, params.dt, sampler));
        }
    }

    ActionContext { range: behavior::combine_ranges(&ranges), pose: lane_pose }
}

/// The other agents of a scene as seen from agent `index`.
pub fn views_except<'a>(
    index: usize,
    ids: &[AgentId],
    states: &[KinematicState],
    candidates: &'a [Vec<RoutePath>],
) -> Vec<AgentView<'a>> {
    (0..ids.len())
        .filter(|j| *j != index)
        .map(|j| AgentView { id: ids[j], state: states[j], candidates: &candidates[j] })
        .collect()
}

/// States of every agent except `index`.
pub fn states_except(index: usize, states: &[KinematicState]) -> Vec<KinematicState> {
    states.iter().enumerate().filter(|(j, _)| *j != index).map(|(_, s)| *s).collect()
}

/// Outcome of moving a route hypothesis along with its agent.
#[derive(Debug, Clone, PartialEq)]
pub enum RouteAdvance {
    /// The route still covers the horizon.
    Keep,
    /// Consistent extensions of the route and their probabilities.
    Extend(Vec<(RoutePath, f64)>),
}

/// Re-enumerates the continuation of `route` once the agent gets within
/// `horizon` of its end. Lanes more than one behind the agent are dropped.
pub fn advance_route(graph: &LaneGraph, route: &RoutePath, state: &KinematicState, horizon: f64) -> RouteAdvance {
    let pose = route.project(graph, state.position());
    if route.length() - pose.d >= horizon {
        return RouteAdvance::Keep;
    }
    let k = pose.lane;
    let lane = route.lanes()[k];
    let s = (pose.d - route.offsets()[k]).clamp(0.0, graph.lane(lane).length());
    let candidates = enumerate_routes(graph, (lane, s), horizon);
    let probs = intent::match_route(route, &candidates);
    let keep_from = k.saturating_sub(1);
    let out = candidates
        .iter()
        .zip(probs)
        .filter(|(_, p)| *p > 0.0)
        .map(|(c, p)| {
            let ext = if route.consistent_with(c) { route.extended_by(graph, c) } else { c.clone() };
            let from = ext.lanes().iter().position(|l| *l == route.lanes()[keep_from]).unwrap_or(0);
            let at = ext.lane_offset(lane).map_or(0.0, |o| o - ext.offsets()[from]);
            (ext.trimmed(graph, from, at + s), p)
        })
        .collect();
    RouteAdvance::Extend(out)
}

use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::context::candidate_routes;
use crate::lanegraph::LaneGraph;
use crate::scenario::archetypes::four_way_intersection;

fn area(entry: f64, other_entry: f64, other_v: f64) -> AreaConflict {
    AreaConflict {
        candidate: 0,
        kind: RelationKind::Cross,
        span: ConflictSpan { first: (entry, entry + 4.0), second: (other_entry, other_entry + 4.0), first_priority: Some(false) },
        self_entry: entry,
        self_exit: entry + 4.0,
        other_entry,
        other_exit: other_entry + 4.0,
        other_v,
    }
}

fn yielding(id: u32) -> PotentialConflict {
    PotentialConflict { other: AgentId(id), areas: vec![area(20.0, 20.0, 8.0)], self_priority: false }
}

const LIMITS: PruningLimits = PruningLimits { accel_max: 3.0, time_gap: 2.0, vehicle_length: 4.5, standing_speed: 0.1 };

#[test]
fn branching_doubles_per_yielding_pair() {
    for n in 0..5u32 {
        let conflicts: Vec<_> = (0..n).map(yielding).collect();
        assert_eq!(enumerate_maneuvers(&conflicts, 5.0, true, None).len(), 1 << n);
    }
}

#[test]
fn priority_pairs_do_not_branch() {
    let mut c = yielding(1);
    c.self_priority = true;
    let m = enumerate_maneuvers(&[c, yielding(2)], 5.0, true, None);
    assert_eq!(m.len(), 2);
    assert!(m.iter().all(|m| m.order(AgentId(1)) == Some(PassingOrder::SelfFirst)));
}

#[test]
fn without_branching_everyone_yields() {
    let m = enumerate_maneuvers(&[yielding(1), yielding(2)], 5.0, false, None);
    assert_eq!(m.len(), 1);
    assert!(m[0].relations().iter().all(|(_, o)| *o == PassingOrder::OtherFirst));
}

#[test]
fn pruning_drops_self_first_when_other_is_inside() {
    let c = PotentialConflict { other: AgentId(1), areas: vec![area(20.0, 0.0, 5.0)], self_priority: false };
    let m = enumerate_maneuvers(&[c], 5.0, true, Some(&LIMITS));
    assert_eq!(m, vec![ManeuverIntention::new(vec![(AgentId(1), PassingOrder::OtherFirst)])]);
}

#[test]
fn pruning_drops_other_first_when_self_is_inside() {
    let c = PotentialConflict { other: AgentId(1), areas: vec![area(0.0, 30.0, 1.0)], self_priority: false };
    let m = enumerate_maneuvers(&[c], 5.0, true, Some(&LIMITS));
    assert_eq!(m, vec![ManeuverIntention::new(vec![(AgentId(1), PassingOrder::SelfFirst)])]);
}

#[test]
fn pruning_drops_unreachable_self_first() {
    // The other arrives in 0.5 s; clearing 24 m plus a 2 s gap is impossible.
    let c = PotentialConflict { other: AgentId(1), areas: vec![area(20.0, 6.25, 8.0)], self_priority: false };
    let m = enumerate_maneuvers(&[c], 5.0, true, Some(&LIMITS));
    assert_eq!(m.len(), 1);
    assert_eq!(m[0].order(AgentId(1)), Some(PassingOrder::OtherFirst));
}

#[test]
fn maneuver_intention_is_canonical() {
    let a = ManeuverIntention::new(vec![(AgentId(3), PassingOrder::SelfFirst), (AgentId(1), PassingOrder::OtherFirst)]);
    let b = ManeuverIntention::new(vec![(AgentId(1), PassingOrder::OtherFirst), (AgentId(3), PassingOrder::SelfFirst)]);
    assert_eq!(a, b);
    assert_eq!(a.order(AgentId(2)), None);
    let c = ManeuverIntention::new(vec![(AgentId(1), PassingOrder::SelfFirst)]);
    assert!(!a.consistent_with(&c));
    assert!(a.consistent_with(&ManeuverIntention::default()));
}

#[test]
fn maneuver_matching_prefers_consistent_sets() {
    let old = ManeuverIntention::new(vec![(AgentId(1), PassingOrder::OtherFirst)]);
    let cands = vec![
        ManeuverIntention::new(vec![(AgentId(1), PassingOrder::OtherFirst), (AgentId(2), PassingOrder::SelfFirst)]),
        ManeuverIntention::new(vec![(AgentId(1), PassingOrder::OtherFirst), (AgentId(2), PassingOrder::OtherFirst)]),
        ManeuverIntention::new(vec![(AgentId(1), PassingOrder::SelfFirst), (AgentId(2), PassingOrder::OtherFirst)]),
    ];
    assert_eq!(match_maneuver(&old, &cands), vec![0.5, 0.5, 0.0]);
    let flipped = ManeuverIntention::new(vec![(AgentId(1), PassingOrder::SelfFirst)]);
    assert_eq!(match_maneuver(&flipped, &cands[..2]), vec![0.5, 0.5]);
}

fn approach_state(graph: &LaneGraph, lane: &str, back: f64, v: f64) -> KinematicState {
    let l = graph.lane(graph.lane_by_id(lane).unwrap());
    let pts = l.centerline.points();
    let end = pts[pts.len() - 1];
    let dir = (end - pts[pts.len() - 2]).normalized();
    let p = end - dir * back;
    KinematicState::new(p.x, p.y, crate::math::atan2(dir.y, dir.x), v)
}

#[test]
fn route_prior_is_uniform_and_needs_candidates() {
    let g = LaneGraph::from_spec(&four_way_intersection()).unwrap();
    let routes = candidate_routes(&g, &approach_state(&g, "s_in", 10.0, 5.0), 30.0);
    assert_eq!(route_prior(AgentId(0), &routes).unwrap(), vec![1.0 / 3.0; 3]);
    assert_eq!(route_prior(AgentId(4), &[]), Err(IntentError::Unmappable(AgentId(4))));
}

#[test]
fn route_matching_keeps_consistent_routes() {
    let g = LaneGraph::from_spec(&four_way_intersection()).unwrap();
    let routes = candidate_routes(&g, &approach_state(&g, "s_in", 10.0, 5.0), 30.0);
    let p = match_route(&routes[1], &routes);
    assert_eq!(p.iter().filter(|x| **x > 0.0).count(), 1);
    assert_eq!(p[1], 1.0);
}

#[test]
fn crossing_approaches_conflict() {
    let g = LaneGraph::from_spec(&four_way_intersection()).unwrap();
    let me = approach_state(&g, "s_in", 10.0, 5.0);
    let other = approach_state(&g, "e_in", 12.0, 5.0);
    let mine = candidate_routes(&g, &me, 30.0);
    let theirs = candidate_routes(&g, &other, 30.0);
    let view = AgentView { id: AgentId(1), state: other, candidates: &theirs };
    let straight = mine.iter().find(|r| r.lanes().iter().any(|l| g.lane(*l).id == "s_straight")).unwrap();
    let conflicts = potential_conflicts(&me, straight, &[view], &g, 4.5);
    assert_eq!(conflicts.len(), 1);
    let c = &conflicts[0];
    assert!(!c.areas.is_empty());
    for a in &c.areas {
        assert!(a.self_entry > 0.0 && a.self_exit > a.self_entry);
        assert_eq!(a.other_v, 5.0);
    }
}

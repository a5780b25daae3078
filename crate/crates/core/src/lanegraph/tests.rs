use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::*;
use crate::scenario::archetypes::four_way_intersection;

fn lane(id: &str, centerline: Vec<[f64; 2]>, successors: &[&str]) -> LaneSpec {
    LaneSpec {
        id: id.into(),
        centerline,
        width: 3.5,
        speed_limits: vec![[0.0, 10.0]],
        yield_line: None,
        successors: successors.iter().map(|s| s.to_string()).collect(),
    }
}

fn rule(a: &str, b: &str) -> [String; 2] {
    [a.into(), b.into()]
}

fn cross_map() -> LaneGraph {
    LaneGraph::from_spec(&MapSpec {
        lanes: vec![
            lane("a", vec![[-20.0, 0.0], [20.0, 0.0]], &[]),
            lane("b", vec![[0.0, -20.0], [0.0, 20.0]], &[]),
        ],
        right_of_way: vec![rule("a", "b")],
    })
    .unwrap()
}

fn route(graph: &LaneGraph, ids: &[&str]) -> RoutePath {
    let lanes = ids.iter().map(|id| graph.lane_by_id(id).unwrap()).collect();
    RoutePath::new(graph, lanes, 0.0, 100.0)
}

#[test]
fn crossing_area_is_the_lane_square() {
    let g = cross_map();
    let rel = route_relation(&route(&g, &["a"]), &route(&g, &["b"]), &g);
    assert_eq!(rel.kind, RelationKind::Cross);
    let area = rel.conflict.unwrap();
    assert!((area.area() - 3.5 * 3.5).abs() < 0.1 * 3.5 * 3.5);
    assert!(area.contains(Vec2::new(0.0, 0.0)));
    assert!(!area.contains(Vec2::new(5.0, 0.0)));
    let (e, x) = area.span.first;
    assert!((e - 18.25).abs() < 0.2 && (x - 21.75).abs() < 0.2, "span {e}..{x}");
    assert_eq!(area.span.first_priority, Some(true));
}

#[test]
fn swapped_span_mirrors_priority() {
    let g = cross_map();
    let (_, ab) = conflict_span(&route(&g, &["a"]), &route(&g, &["b"]), &g);
    let (_, ba) = conflict_span(&route(&g, &["b"]), &route(&g, &["a"]), &g);
    let ab = ab.unwrap();
    let ba = ba.unwrap();
    assert_eq!(ab.swapped().first_priority, ba.first_priority);
    assert!((ab.swapped().first.0 - ba.first.0).abs() < 1e-9);
}

fn merge_map() -> LaneGraph {
    LaneGraph::from_spec(&MapSpec {
        lanes: vec![
            lane("left", vec![[-20.0, 10.0], [0.0, 0.0]], &["out"]),
            lane("right", vec![[-20.0, -10.0], [0.0, 0.0]], &["out"]),
            lane("out", vec![[0.0, 0.0], [30.0, 0.0]], &[]),
            lane("up", vec![[0.0, 0.0], [0.0, 30.0]], &[]),
            lane("in", vec![[-30.0, 0.0], [0.0, 0.0]], &["out", "up"]),
        ],
        right_of_way: Vec::new(),
    })
    .unwrap()
}

#[test]
fn relation_kinds() {
    let g = merge_map();
    let l = route(&g, &["left", "out"]);
    let r = route(&g, &["right", "out"]);
    assert_eq!(route_relation(&l, &r, &g).kind, RelationKind::Merge);
    assert_eq!(route_relation(&l, &l, &g).kind, RelationKind::Identical);
    let straight = route(&g, &["in", "out"]);
    let turn = route(&g, &["in", "up"]);
    assert_eq!(route_relation(&straight, &turn, &g).kind, RelationKind::Diverge);
    assert_eq!(route_relation(&l, &r, &g).conflict.unwrap().span.first_priority, None);
}

#[test]
fn routes_branch_at_successors() {
    let g = merge_map();
    let routes = enumerate_routes(&g, (g.lane_by_id("in").unwrap(), 0.0), 40.0);
    let ids: Vec<Vec<&str>> =
        routes.iter().map(|r| r.lanes().iter().map(|l| g.lane(*l).id.as_str()).collect()).collect();
    assert_eq!(ids, vec![vec!["in", "out"], vec!["in", "up"]]);
}

#[test]
fn short_horizon_stops_on_the_first_lane() {
    let g = merge_map();
    let routes = enumerate_routes(&g, (g.lane_by_id("in").unwrap(), 0.0), 10.0);
    assert_eq!(routes.len(), 1);
    assert_eq!(routes[0].lanes().len(), 1);
}

#[test]
fn four_way_approach_has_three_routes() {
    let g = LaneGraph::from_spec(&four_way_intersection()).unwrap();
    for arm in ["s_in", "e_in", "n_in", "w_in"] {
        let idx = g.lane_by_id(arm).unwrap();
        let routes = enumerate_routes(&g, (idx, g.lane(idx).length() - 5.0), 30.0);
        assert_eq!(routes.len(), 3, "{arm}");
    }
}

#[test]
fn arc_curvature_matches_radius() {
    let radius = 20.0;
    let arc: Vec<[f64; 2]> = (0..=60)
        .map(|i| {
            let phi = -PI / 2.0 + PI / 2.0 * i as f64 / 60.0;
            [radius * phi.cos(), radius + radius * phi.sin()]
        })
        .collect();
    let g = LaneGraph::from_spec(&MapSpec { lanes: vec![lane("arc", arc, &[])], right_of_way: Vec::new() }).unwrap();
    let l = g.lane(g.lane_by_id("arc").unwrap());
    let mid = l.length() / 2.0;
    assert!((l.curvature_at(mid).abs() - 1.0 / radius).abs() < 0.05 / radius);
    let r = route(&g, &["arc"]);
    let tight = curvature_profile(&r, &g).iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
    assert!((tight - radius).abs() < 0.1 * radius);
}

#[test]
fn straight_lane_has_no_curvature() {
    let g = cross_map();
    let l = g.lane(g.lane_by_id("a").unwrap());
    assert_eq!(l.curvature_at(10.0), 0.0);
}

#[test]
fn speed_limit_segments() {
    let mut a = lane("a", vec![[0.0, 0.0], [100.0, 0.0]], &[]);
    a.speed_limits = vec![[0.0, 10.0], [50.0, 5.0]];
    let g = LaneGraph::from_spec(&MapSpec { lanes: vec![a], right_of_way: Vec::new() }).unwrap();
    let l = g.lane(LaneIdx(0));
    assert_eq!(l.speed_limit_at(20.0), 10.0);
    assert_eq!(l.speed_limit_at(70.0), 5.0);
    let r = route(&g, &["a"]);
    let (dist, limit) = r.next_limit_change(&g, 20.0).unwrap();
    assert!((dist - 30.0).abs() < 1e-9 && limit == 5.0);
}

#[test]
fn matching_finds_the_lane_under_the_agent() {
    let g = cross_map();
    let m = g.match_lane(&KinematicState::new(-10.0, 0.5, 0.0, 5.0));
    assert_eq!(m.len(), 1);
    assert_eq!(g.lane(m[0].0).id, "a");
    assert!((m[0].1 - 10.0).abs() < 1e-9);
    assert!(g.match_lane(&KinematicState::new(-10.0, 15.0, 0.0, 5.0)).is_empty());
}

#[test]
fn projection_reports_lateral_offset() {
    let g = cross_map();
    let p = route(&g, &["a"]).project(&g, Vec2::new(5.0, 1.0));
    assert!((p.d - 25.0).abs() < 1e-9);
    assert!((p.lateral - 1.0).abs() < 1e-9);
}

#[test]
fn invalid_maps_are_rejected() {
    let dup = MapSpec {
        lanes: vec![lane("a", vec![[0.0, 0.0], [1.0, 0.0]], &[]), lane("a", vec![[0.0, 0.0], [1.0, 0.0]], &[])],
        right_of_way: Vec::new(),
    };
    assert!(matches!(LaneGraph::from_spec(&dup), Err(MapError::DuplicateLane(_))));

    let missing = MapSpec { lanes: vec![lane("a", vec![[0.0, 0.0], [1.0, 0.0]], &["b"])], right_of_way: Vec::new() };
    assert!(matches!(LaneGraph::from_spec(&missing), Err(MapError::MissingSuccessor { .. })));

    let gap = MapSpec {
        lanes: vec![lane("a", vec![[0.0, 0.0], [10.0, 0.0]], &["b"]), lane("b", vec![[12.0, 0.0], [20.0, 0.0]], &[])],
        right_of_way: Vec::new(),
    };
    assert!(matches!(LaneGraph::from_spec(&gap), Err(MapError::Discontinuous { .. })));

    let contradiction = MapSpec {
        lanes: vec![lane("a", vec![[-5.0, 0.0], [5.0, 0.0]], &[]), lane("b", vec![[0.0, -5.0], [0.0, 5.0]], &[])],
        right_of_way: vec![rule("a", "b"), rule("b", "a")],
    };
    assert!(matches!(LaneGraph::from_spec(&contradiction), Err(MapError::ContradictoryRule(..))));

    let unknown = MapSpec { lanes: vec![lane("a", vec![[0.0, 0.0], [1.0, 0.0]], &[])], right_of_way: vec![rule("a", "z")] };
    assert!(matches!(LaneGraph::from_spec(&unknown), Err(MapError::UnknownRuleLane(_))));
}

#[test]
fn priority_is_antisymmetric() {
    let g = cross_map();
    let (a, b) = (g.lane_by_id("a").unwrap(), g.lane_by_id("b").unwrap());
    assert_eq!(g.priority(a, b), Some(true));
    assert_eq!(g.priority(b, a), Some(false));
}

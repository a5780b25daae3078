use alloc::vec;
use core::f64::consts::PI;

use super::*;
use crate::inference::ParticleFilter;
use crate::lanegraph::LaneGraph;
use crate::scenario::archetypes::{four_way_intersection, route_ids, Archetype, Turn};
use crate::scenario::{self, SceneLog};

fn setup(particles: usize) -> (LaneGraph, SceneLog, RunConfig) {
    let graph = LaneGraph::from_spec(&four_way_intersection()).unwrap();
    let config = RunConfig { particles, seed: 4, ..RunConfig::default() };
    let log = scenario::simulate(&Archetype::Lone.spec(4), &graph, &config).unwrap();
    (graph, log, config)
}

fn initial_belief(graph: &LaneGraph, log: &SceneLog, config: RunConfig) -> Belief {
    ParticleFilter::new(graph, config).init(&log.frames[0].measurements()).unwrap()
}

#[test]
fn grouping_averages_states_per_intention() {
    let (graph, log, config) = setup(4);
    let mut belief = initial_belief(&graph, &log, config);
    let states = [(0.0, 0.0, PI - 0.1, 4.0), (2.0, 4.0, -PI + 0.1, 6.0), (10.0, 0.0, 0.0, 1.0), (0.0, 0.0, 0.0, 1.0)];
    let labels = [Some(0), Some(0), None, None];
    let weights = [1.0, 1.0, 1.0, 1.0];
    for (p, ((s, l), w)) in belief.particles.iter_mut().zip(states.iter().zip(labels).zip(weights)) {
        p.agents[0].state = KinematicState::new(s.0, s.1, s.2, s.3);
        p.agents[0].label = l;
        p.weight = w;
    }
    let hyps = group_hypotheses(&belief);
    assert_eq!(hyps.len(), 2);
    let labelled = hyps.iter().find(|h| h.intention[0].0 == Some(0)).unwrap();
    let s = labelled.agents[0].state;
    assert!((labelled.probability - 0.5).abs() < 1e-12);
    assert!((s.x - 1.0).abs() < 1e-12 && (s.y - 2.0).abs() < 1e-12 && (s.v - 5.0).abs() < 1e-12);
    assert!((s.theta.abs() - PI).abs() < 1e-9, "circular mean {}", s.theta);
}

#[test]
fn prediction_set_is_normalised_and_spans_the_horizon() {
    let (graph, log, config) = setup(200);
    let belief = initial_belief(&graph, &log, config);
    let set = predict_scene(&belief, &graph, &config, RolloutMode::Mean);
    assert!((set.total_probability() - 1.0).abs() < 1e-12);
    assert_eq!(set.steps(), 25);
    for h in &set.hypotheses {
        assert_eq!(h.trajectory.len(), 25);
        assert!(h.trajectory.iter().all(|s| s.len() == 1));
    }
}

#[test]
fn hypotheses_below_the_floor_are_dropped() {
    let (graph, log, config) = setup(10);
    let mut belief = initial_belief(&graph, &log, config);
    for (k, p) in belief.particles.iter_mut().enumerate() {
        p.agents[0].label = if k == 0 { None } else { Some(0) };
        p.weight = if k == 0 { 1e-6 } else { 1.0 };
    }
    let set = predict_scene(&belief, &graph, &config, RolloutMode::Mean);
    assert_eq!(set.hypotheses.len(), 1);
    assert_eq!(set.hypotheses[0].probability, 1.0);
}

#[test]
fn mean_rollouts_are_reproducible() {
    let (graph, log, config) = setup(100);
    let belief = initial_belief(&graph, &log, config);
    let a = predict_scene(&belief, &graph, &config, RolloutMode::Mean);
    let b = predict_scene(&belief, &graph, &config, RolloutMode::Mean);
    assert_eq!(a, b);
}

fn lone_hypothesis(graph: &LaneGraph, turn: Turn, v: f64) -> SceneHypothesis {
    let ids = route_ids(0, turn);
    let lanes = ids.iter().map(|id| graph.lane_by_id(id).unwrap()).collect();
    let route = RoutePath::new(graph, lanes, 0.0, 60.0);
    let start = route.point_at(graph, graph.lane(route.lanes()[0]).length() - 30.0);
    let state = KinematicState::new(start.x, start.y, PI / 2.0, v);
    SceneHypothesis {
        intention: vec![(Some(0), ManeuverIntention::default())],
        probability: 1.0,
        agents: vec![HypothesisAgent { id: AgentId(0), state, route, label: Some(0), maneuver: ManeuverIntention::default() }],
    }
}

#[test]
fn mean_rollout_slows_down_for_the_turn() {
    let graph = LaneGraph::from_spec(&four_way_intersection()).unwrap();
    let config = RunConfig::default();
    let h = lone_hypothesis(&graph, Turn::Left, 10.0);
    let mut rng = crate::inference::stream_rng(0, 0, 0, 0);
    let traj = forward_simulate(&h, &graph, &config, 60, RolloutMode::Mean, &mut rng);
    let connector = graph.lane_by_id(&route_ids(0, Turn::Left)[1]).unwrap();
    let on_curve: Vec<f64> = traj
        .iter()
        .map(|s| s[0])
        .filter(|s| graph.match_lane(s).iter().any(|(l, _)| *l == connector))
        .map(|s| s.v)
        .collect();
    assert!(!on_curve.is_empty());
    let radius = 1.0 / graph.lane(connector).curvature_samples().iter().map(|(_, k)| k.abs()).fold(0.0, f64::max);
    let bound = (config.model.sampler.lat_accel_max * radius).sqrt();
    assert!(on_curve.iter().all(|v| *v <= bound + 0.1), "{on_curve:?} vs {bound}");
}

#[test]
fn straight_rollout_keeps_the_lane() {
    let graph = LaneGraph::from_spec(&four_way_intersection()).unwrap();
    let config = RunConfig::default();
    let h = lone_hypothesis(&graph, Turn::Straight, 8.0);
    let mut rng = crate::inference::stream_rng(0, 0, 0, 0);
    let traj = forward_simulate(&h, &graph, &config, 25, RolloutMode::Mean, &mut rng);
    let x0 = h.agents[0].state.x;
    assert!(traj.iter().all(|s| (s[0].x - x0).abs() < 0.05));
    assert!(traj.windows(2).all(|w| w[1][0].y > w[0][0].y));
}

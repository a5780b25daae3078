use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::*;
use crate::behavior::PassingOrder;
use crate::lanegraph::LaneIdx;
use crate::scenario::archetypes::{four_way_intersection, Archetype};
use crate::scenario::{self, SceneLog};

fn four_way() -> LaneGraph {
    LaneGraph::from_spec(&four_way_intersection()).unwrap()
}

fn lone_log(graph: &LaneGraph) -> SceneLog {
    let config = RunConfig { seed: 3, ..RunConfig::default() };
    scenario::simulate(&Archetype::Lone.spec(3), graph, &config).unwrap()
}

fn small_config(particles: usize) -> RunConfig {
    RunConfig { particles, seed: 11, ..RunConfig::default() }
}

fn tagged(weights: &[f64]) -> Vec<Particle> {
    let graph = four_way();
    let route = RoutePath::new(&graph, vec![LaneIdx(0)], 0.0, 30.0);
    weights
        .iter()
        .enumerate()
        .map(|(k, w)| Particle {
            agents: vec![AgentHypothesis {
                state: KinematicState::default(),
                route: route.clone(),
                label: Some(0),
                maneuver: ManeuverIntention::default(),
                action: Action { accel: k as f64, yaw_rate: 0.0 },
            }],
            weight: *w,
        })
        .collect()
}

#[test]
fn update_weights_follow_the_measurement_density() {
    let graph = four_way();
    let log = lone_log(&graph);
    let zs = log.frames[0].measurements();
    let filter = ParticleFilter::new(&graph, small_config(2));
    let mut belief = filter.init(&zs).unwrap();
    let z = zs[0].z;
    let sigma = filter.config().noise.sigma_zx;
    belief.particles[0].agents[0].state = z;
    belief.particles[1].agents[0].state = KinematicState { x: z.x + sigma, ..z };
    filter.update(&mut belief, &zs).unwrap();
    let ratio = belief.particles[0].weight / belief.particles[1].weight;
    assert!((ratio - 0.5f64.exp()).abs() < 1e-9);
    assert!((belief.total_weight() - 1.0).abs() < 1e-12);
}

#[test]
fn zero_weights_are_degenerate() {
    let graph = four_way();
    let log = lone_log(&graph);
    let zs = log.frames[0].measurements();
    let filter = ParticleFilter::new(&graph, small_config(4));
    let mut belief = filter.init(&zs).unwrap();
    for p in &mut belief.particles {
        p.weight = 0.0;
    }
    assert_eq!(filter.update(&mut belief, &zs), Err(FilterError::DegenerateBelief));
}

#[test]
fn init_needs_measurements() {
    let graph = four_way();
    let filter = ParticleFilter::new(&graph, small_config(4));
    assert_eq!(filter.init(&[]).unwrap_err(), FilterError::NoMeasurements);
}

#[test]
fn off_map_agents_cannot_be_tracked() {
    let graph = four_way();
    let filter = ParticleFilter::new(&graph, small_config(4));
    let z = Measurement { agent: AgentId(9), timestamp: 0.0, z: KinematicState::new(500.0, 500.0, 0.0, 3.0) };
    assert!(matches!(filter.init(&[z]), Err(FilterError::Intent(_))));
}

#[test]
fn systematic_resampling_copies_in_proportion() {
    let mut rng = stream_rng(5, 99, 0, 0);
    let out = systematic_resample(&tagged(&[0.5, 0.25, 0.125, 0.125]), &mut rng);
    let mut counts = [0usize; 4];
    for p in &out {
        counts[p.agents[0].action.accel as usize] += 1;
        assert_eq!(p.weight, 0.25);
    }
    assert_eq!(counts[0], 2);
    assert_eq!(counts[1], 1);
    assert_eq!(counts[2] + counts[3], 1);
}

#[test]
fn systematic_resampling_count_bounds() {
    let weights = [0.37, 0.05, 0.21, 0.02, 0.35];
    for seed in 0..200 {
        let mut rng = stream_rng(seed, 99, 0, 0);
        let n = 40;
        let mut ps = Vec::new();
        for _ in 0..n / weights.len() {
            ps.extend(tagged(&weights));
        }
        let total: f64 = ps.iter().map(|p| p.weight).sum();
        let out = systematic_resample(&ps, &mut rng);
        assert_eq!(out.len(), ps.len());
        for (k, w) in weights.iter().enumerate() {
            let got = out.iter().filter(|p| p.agents[0].action.accel as usize == k).count() as f64;
            let expected = n as f64 * w * (n / weights.len()) as f64 / total;
            assert!((got - expected).abs() <= (n / weights.len()) as f64 + 1.0, "seed {seed} k {k}");
        }
    }
}

#[test]
fn resampling_unbiased_in_expectation() {
    let weights = [0.6, 0.3, 0.1];
    let trials = 1000;
    let mut hits = [0usize; 3];
    for t in 0..trials {
        let mut rng = stream_rng(t, 98, 0, 0);
        for p in systematic_resample(&tagged(&weights), &mut rng) {
            hits[p.agents[0].action.accel as usize] += 1;
        }
    }
    for (k, w) in weights.iter().enumerate() {
        let freq = hits[k] as f64 / (3 * trials) as f64;
        assert!((freq - w).abs() < 4.0 * 0.5 / (trials as f64).sqrt(), "{k}: {freq}");
    }
}

#[test]
fn effective_sample_size_extremes() {
    let graph = four_way();
    let filter = ParticleFilter::new(&graph, small_config(8));
    let log = lone_log(&graph);
    let mut belief = filter.init(&log.frames[0].measurements()).unwrap();
    assert!((belief.effective_sample_size() - 8.0).abs() < 1e-9);
    assert!(!filter.resample(&mut belief));
    for (k, p) in belief.particles.iter_mut().enumerate() {
        p.weight = if k == 0 { 1.0 } else { 0.0 };
    }
    assert!((belief.effective_sample_size() - 1.0).abs() < 1e-12);
    assert!(filter.resample(&mut belief));
    assert!(belief.particles.iter().all(|p| p.weight == 0.125));
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let draw = |purpose, index, step| stream_rng(7, purpose, index, step).gen::<u64>();
    assert_eq!(draw(1, 2, 3), draw(1, 2, 3));
    assert_ne!(draw(1, 2, 3), draw(2, 2, 3));
    assert_ne!(draw(1, 2, 3), draw(1, 3, 3));
    assert_ne!(draw(1, 2, 3), draw(1, 2, 4));
}

fn run(graph: &LaneGraph, log: &SceneLog, config: RunConfig) -> Belief {
    let filter = ParticleFilter::new(graph, config);
    let mut belief = None;
    for frame in &log.frames[..15] {
        belief = Some(filter.step(belief, &frame.measurements()).unwrap().0);
    }
    belief.unwrap()
}

#[test]
fn filtering_is_deterministic_under_a_seed() {
    let graph = four_way();
    let log = lone_log(&graph);
    let a = run(&graph, &log, small_config(200));
    let b = run(&graph, &log, small_config(200));
    assert_eq!(a.particles, b.particles);
    let c = run(&graph, &log, RunConfig { seed: 12, ..small_config(200) });
    assert_ne!(a.particles, c.particles);
}

#[test]
fn lone_agent_has_no_maneuvers_and_tracks_its_position() {
    let graph = four_way();
    let log = lone_log(&graph);
    let belief = run(&graph, &log, small_config(300));
    let post = intention_posterior(&belief);
    assert!(post.maneuvers[0].iter().all(|(m, _)| m.is_empty()));
    let truth = log.frames[14].agents[0].gt.x;
    let (mx, my) = belief
        .particles
        .iter()
        .fold((0.0, 0.0), |(x, y), p| (x + p.weight * p.agents[0].state.x, y + p.weight * p.agents[0].state.y));
    let total = belief.total_weight();
    assert!(((mx / total - truth[0]).powi(2) + (my / total - truth[1]).powi(2)).sqrt() < 5.0);
}

#[test]
fn posterior_sums_weights_per_combination() {
    let graph = four_way();
    let log = lone_log(&graph);
    let filter = ParticleFilter::new(&graph, small_config(4));
    let mut belief = filter.init(&log.frames[0].measurements()).unwrap();
    let m = ManeuverIntention::new(vec![(AgentId(5), PassingOrder::OtherFirst)]);
    let setup = [(Some(0), 1.0, false), (Some(0), 2.0, true), (Some(7), 3.0, false), (None, 2.0, false)];
    for (p, (label, w, maneuver)) in belief.particles.iter_mut().zip(setup) {
        p.agents[0].label = label;
        p.agents[0].maneuver = if maneuver { m.clone() } else { ManeuverIntention::default() };
        p.weight = w;
    }
    let post = intention_posterior(&belief);
    let routes = &post.routes[0];
    assert!((routes[0] - 0.375).abs() < 1e-12);
    assert_eq!(routes.len(), belief.agents[0].candidates.len());
    assert!((post.unmatched[0] - 0.625).abs() < 1e-12);
    assert_eq!(post.joint.len(), 4);
    let yielding = post.maneuvers[0].iter().find(|(k, _)| *k == m).unwrap().1;
    assert!((yielding - 0.25).abs() < 1e-12);
    assert!((post.joint.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn step_without_belief_initialises() {
    let graph = four_way();
    let log = lone_log(&graph);
    let filter = ParticleFilter::new(&graph, small_config(10));
    let (belief, reinit) = filter.step(None, &log.frames[0].measurements()).unwrap();
    assert!(!reinit);
    assert_eq!(belief.len(), 10);
    assert!(belief.particles.iter().all(|p| p.weight == 0.1));
}

use alloc::vec;

use super::*;
use crate::kinematics::KinematicState;
use crate::scenario::archetypes::{four_way_intersection, Archetype};
use crate::scenario;

fn at(x: f64, y: f64) -> KinematicState {
    KinematicState::new(x, y, 0.0, 0.0)
}

fn two_hypotheses() -> PredictionSet {
    PredictionSet {
        dt: 0.2,
        horizon: 0.2,
        agents: vec![AgentId(0), AgentId(1)],
        hypotheses: vec![
            Prediction { probability: 0.25, intention: Vec::new(), trajectory: vec![vec![at(2.0, 0.0), at(0.0, 2.0)]] },
            Prediction { probability: 0.75, intention: Vec::new(), trajectory: vec![vec![at(0.0, 0.0), at(0.0, 0.0)]] },
        ],
    }
}

#[test]
fn rmse_weights_hypotheses() {
    let truth = [(AgentId(0), [0.0, 0.0]), (AgentId(1), [0.0, 0.0])];
    let eps = weighted_rmse(&two_hypotheses(), 1, &truth).unwrap();
    // 0.25 * (4 + 4) + 0.75 * 0
    assert!((eps - 2.0f64.sqrt()).abs() < 1e-12);
    assert_eq!(weighted_rmse(&two_hypotheses(), 0, &truth), None);
    assert_eq!(weighted_rmse(&two_hypotheses(), 2, &truth), None);
}

#[test]
fn likelihood_is_the_weighted_product() {
    let truth = [(AgentId(0), [0.0, 0.0])];
    let g = |d: f64| (-0.5 * d * d).exp() / (2.0 * core::f64::consts::PI).sqrt();
    let expected = (0.25 * g(2.0) * g(0.0)) * (0.75 * g(0.0) * g(0.0));
    let lik = weighted_likelihood(&two_hypotheses(), 1, &truth, 1.0).unwrap();
    assert!((lik - expected).abs() < 1e-15);
}

#[test]
fn unknown_agents_are_ignored_by_rmse() {
    let truth = [(AgentId(7), [0.0, 0.0])];
    assert_eq!(weighted_rmse(&two_hypotheses(), 1, &truth), None);
}

#[test]
fn kld_of_a_one_hot_truth() {
    assert!((kld(&[1.0 / 3.0; 3], 1).unwrap() - 3.0f64.ln()).abs() < 1e-12);
    assert_eq!(kld(&[0.0, 1.0], 1).unwrap(), 0.0);
    assert!((kld(&[0.0, 1.0], 0).unwrap() - 1e6f64.ln()).abs() < 1e-9);
    assert_eq!(kld(&[0.5, 0.5], 2), Err(EvalError::Misaligned { truth: 2, len: 2 }));
    assert_eq!(kld(&[0.5, 0.6], 0), Err(EvalError::NotNormalized));
}

#[test]
fn model_names_round_trip() {
    for k in ModelKind::ALL {
        assert_eq!(ModelKind::from_name(k.name()), Some(k));
    }
    assert_eq!(ModelKind::from_name("nope"), None);
}

#[test]
fn ctrv_extrapolates_a_straight_agent_exactly() {
    let graph = LaneGraph::from_spec(&four_way_intersection()).unwrap();
    let config = RunConfig { seed: 2, ..RunConfig::default() };
    let mut log = scenario::simulate(&Archetype::Lone.spec(2), &graph, &config).unwrap();
    for (k, f) in log.frames.iter_mut().enumerate() {
        for a in &mut f.agents {
            a.z = [0.0, 5.0 * k as f64 * 0.2, core::f64::consts::FRAC_PI_2, 5.0];
        }
    }
    let run = run_ctrv(&log, &config);
    let set = run.frames[3].prediction.as_ref().unwrap();
    let last = set.hypotheses[0].trajectory.last().unwrap()[0];
    assert!(last.x.abs() < 1e-9);
    assert!((last.y - (3.0 * 0.2 * 5.0 + 5.0 * config.horizon)).abs() < 1e-9);
}

#[test]
fn metric_rows_cover_agents_and_the_scene() {
    let graph = LaneGraph::from_spec(&four_way_intersection()).unwrap();
    let config = RunConfig { seed: 2, particles: 100, ..RunConfig::default() };
    let spec = Archetype::Scene1.spec(2);
    let mut log = scenario::simulate(&spec, &graph, &config).unwrap();
    log.frames.truncate(12);
    let run = run_model(ModelKind::Interactive, &log, &graph, &config, true).unwrap();
    let rows = metric_rows(&run, &log, &graph, config.sigma_eval);
    let first: Vec<_> = rows.iter().filter(|r| r.t == 0.0 && r.tau > 0.19 && r.tau < 0.21).collect();
    assert_eq!(first.len(), 3);
    assert!(first.iter().any(|r| r.agent.is_none() && r.kld_route.is_none()));
    assert!(first.iter().filter(|r| r.agent.is_some()).all(|r| r.kld_route.is_some() && r.kld_maneuver.is_some()));
    assert!(rows.iter().all(|r| r.eps >= 0.0 && r.lik >= 0.0));
    assert!(rows.iter().all(|r| r.t + r.tau <= 11.0 * 0.2 + 1e-9));
}

#[test]
fn map_based_scores_no_maneuvers() {
    let graph = LaneGraph::from_spec(&four_way_intersection()).unwrap();
    let config = RunConfig { seed: 2, particles: 50, ..RunConfig::default() };
    let mut log = scenario::simulate(&Archetype::Scene1.spec(2), &graph, &config).unwrap();
    log.frames.truncate(3);
    let run = run_model(ModelKind::MapBased, &log, &graph, &config, false).unwrap();
    let s = score_intentions(&run, 0, AgentId(0), &log, &graph);
    assert!(s.route.is_some());
    assert_eq!(s.maneuver, None);
}

//! Combinatorial forward simulation: one multi-agent rollout per intention
//! combination present in the belief, weighted by its probability.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::config::RunConfig;
use crate::context::{self, RouteAdvance};
use crate::inference::{stream_rng, AgentIntention, Belief};
use crate::intent::ManeuverIntention;
use crate::kinematics::{self, AgentId, KinematicState};
use crate::lanegraph::{LaneGraph, RoutePath};
use crate::math;

const FORECAST_STREAM: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RolloutMode {
    /// Noise-free rollout with the nominal action.
    #[default]
    Mean,
    /// Sampled actions and process noise.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisAgent {
    pub id: AgentId,
    pub state: KinematicState,
    pub route: RoutePath,
    pub label: Option<usize>,
    pub maneuver: ManeuverIntention,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneHypothesis {
    pub intention: Vec<AgentIntention>,
    pub probability: f64,
    pub agents: Vec<HypothesisAgent>,
}

/// Joint states per step: `steps[k][agent]` is the state `k + 1` steps ahead.
pub type MultiAgentTrajectory = Vec<Vec<KinematicState>>;

/// One weighted multi-agent trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    /// Intention combination behind the trajectory; empty for models
    /// without intentions.
    pub intention: Vec<AgentIntention>,
    pub trajectory: MultiAgentTrajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub dt: f64,
    pub horizon: f64,
    pub agents: Vec<AgentId>,
    pub hypotheses: Vec<Prediction>,
}

impl PredictionSet {
    pub fn total_probability(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.probability).sum()
    }

    pub fn steps(&self) -> usize {
        self.hypotheses.first().map_or(0, |h| h.trajectory.len())
    }

    pub fn agent_index(&self, id: AgentId) -> Option<usize> {
        self.agents.iter().position(|a| *a == id)
    }
}

#[derive(Default)]
struct StateSum {
    w: f64,
    x: f64,
    y: f64,
    sin: f64,
    cos: f64,
    v: f64,
}

impl StateSum {
    fn add(&mut self, s: &KinematicState, w: f64) {
        self.w += w;
        self.x += w * s.x;
        self.y += w * s.y;
        self.sin += w * math::sin(s.theta);
        self.cos += w * math::cos(s.theta);
        self.v += w * s.v;
    }

    fn mean(&self) -> KinematicState {
        KinematicState::new(self.x / self.w, self.y / self.w, math::atan2(self.sin, self.cos), self.v / self.w)
    }
}

/// Partitions particles by intention combination. Each hypothesis starts
/// from the weighted mean state (circular mean for headings) and uses the
/// routes of its heaviest particle.
pub fn group_hypotheses(belief: &Belief) -> Vec<SceneHypothesis> {
    struct Group {
        weight: f64,
        sums: Vec<StateSum>,
        best: usize,
        best_weight: f64,
    }
    let total = belief.total_weight();
    let n_agents = belief.agents.len();
    let mut groups: BTreeMap<Vec<AgentIntention>, Group> = BTreeMap::new();
    for (i, p) in belief.particles.iter().enumerate() {
        let key: Vec<AgentIntention> = p.agents.iter().map(|a| (a.label, a.maneuver.clone())).collect();
        let g = groups.entry(key).or_insert_with(|| Group {
            weight: 0.0,
            sums: (0..n_agents).map(|_| StateSum::default()).collect(),
            best: i,
            best_weight: f64::NEG_INFINITY,
        });
        g.weight += p.weight;
        for (sum, a) in g.sums.iter_mut().zip(&p.agents) {
            sum.add(&a.state, p.weight);
        }
        if p.weight > g.best_weight {
            g.best = i;
            g.best_weight = p.weight;
        }
    }
    groups
        .into_iter()
        .map(|(key, g)| {
            let best = &belief.particles[g.best];
            let agents = belief
                .agents
                .iter()
                .enumerate()
                .map(|(k, tracked)| HypothesisAgent {
                    id: tracked.id,
                    state: if g.weight > 0.0 { g.sums[k].mean() } else { best.agents[k].state },
                    route: best.agents[k].route.clone(),
                    label: key[k].0,
                    maneuver: key[k].1.clone(),
                })
                .collect();
            SceneHypothesis { intention: key, probability: g.weight / total, agents }
        })
        .collect()
}

/// Rolls a hypothesis forward for `steps` steps. Intentions stay fixed;
/// routes are extended only where the continuation is unique. Every agent
/// acts on the joint state of the previous step.
pub fn forward_simulate<R: Rng + ?Sized>(
    hypothesis: &SceneHypothesis,
    graph: &LaneGraph,
    config: &RunConfig,
    steps: usize,
    mode: RolloutMode,
    rng: &mut R,
) -> MultiAgentTrajectory {
    let params = &config.model;
    let ids: Vec<AgentId> = hypothesis.agents.iter().map(|a| a.id).collect();
    let mut states: Vec<KinematicState> = hypothesis.agents.iter().map(|a| a.state).collect();
    let mut routes: Vec<RoutePath> = hypothesis.agents.iter().map(|a| a.route.clone()).collect();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        for (route, state) in routes.iter_mut().zip(&states) {
            if let RouteAdvance::Extend(options) = context::advance_route(graph, route, state, config.route_horizon) {
                if options.len() == 1 {
                    *route = options[0].0.clone();
                }
            }
        }
        let cands: Vec<Vec<RoutePath>> =
            states.iter().map(|s| context::candidate_routes(graph, s, config.route_horizon)).collect();
        let mut actions = Vec::with_capacity(states.len());
        for (i, agent) in hypothesis.agents.iter().enumerate() {
            let views = context::views_except(i, &ids, &states, &cands);
            let conflicts = context::conflicts_for(graph, &states[i], &routes[i], &views, params);
            let others = context::states_except(i, &states);
            let ctx =
                context::action_context(graph, &states[i], &routes[i], &agent.maneuver, &conflicts, &others, params);
            actions.push(match mode {
                RolloutMode::Mean => ctx.nominal(states[i].v, params),
                RolloutMode::Sampled => ctx.sample(states[i].v, params, rng),
            });
        }
        for (s, a) in states.iter_mut().zip(&actions) {
            *s = match mode {
                RolloutMode::Mean => kinematics::step_mean(s, a, params.dt),
                RolloutMode::Sampled => kinematics::step(s, a, params.dt, &config.noise, rng),
            };
        }
        out.push(states.clone());
    }
    out
}

/// Groups the belief into hypotheses, drops those below the probability
/// floor, renormalises, and rolls each one forward over the horizon.
pub fn predict_scene(belief: &Belief, graph: &LaneGraph, config: &RunConfig, mode: RolloutMode) -> PredictionSet {
    let mut hyps = group_hypotheses(belief);
    let floor = config.hypothesis_floor;
    if hyps.iter().any(|h| h.probability >= floor) {
        hyps.retain(|h| h.probability >= floor);
    }
    let total: f64 = hyps.iter().map(|h| h.probability).sum();
    for h in &mut hyps {
        h.probability /= total;
    }
    let steps = config.horizon_steps();
    let hypotheses = hyps
        .into_iter()
        .enumerate()
        .map(|(k, h)| {
            let mut rng = stream_rng(config.seed, FORECAST_STREAM, k as u64, belief.step);
            let trajectory = forward_simulate(&h, graph, config, steps, mode, &mut rng);
            Prediction { probability: h.probability, intention: h.intention, trajectory }
        })
        .collect();
    PredictionSet { dt: config.model.dt, horizon: config.horizon, agents: belief.agent_ids(), hypotheses }
}

#[cfg(test)]
mod tests;

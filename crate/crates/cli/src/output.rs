//! Serializable views of posteriors, prediction sets and metric rows.

use std::collections::BTreeMap;

use serde::Serialize;
use scene_forecaster_core::behavior::PassingOrder;
use scene_forecaster_core::evaluation::{FrameEstimate, MetricRow, ModelRun};
use scene_forecaster_core::forecast::PredictionSet;
use scene_forecaster_core::inference::AgentIntention;
use scene_forecaster_core::intent::ManeuverIntention;
use scene_forecaster_core::{AgentId, LaneGraph, RoutePath};

pub type Orders = BTreeMap<AgentId, PassingOrder>;

fn orders(m: &ManeuverIntention) -> Orders {
    m.relations().iter().copied().collect()
}

fn lane_ids(graph: &LaneGraph, route: &RoutePath) -> Vec<String> {
    route.lanes().iter().map(|l| graph.lane(*l).id.clone()).collect()
}

#[derive(Debug, Serialize)]
pub struct IntentionView {
    pub agent: AgentId,
    /// Index into the agent's candidate routes; `None` for unmatched routes.
    pub route: Option<usize>,
    pub order: Orders,
}

fn intention_views(agents: &[AgentId], key: &[AgentIntention]) -> Vec<IntentionView> {
    agents
        .iter()
        .zip(key)
        .map(|(agent, (route, m))| IntentionView { agent: *agent, route: *route, order: orders(m) })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct ManeuverMass {
    pub order: Orders,
    pub probability: f64,
}

#[derive(Debug, Serialize)]
pub struct AgentMarginals {
    pub id: AgentId,
    /// Lane ids of every candidate route.
    pub candidates: Vec<Vec<String>>,
    pub routes: Vec<f64>,
    pub unmatched: f64,
    pub maneuvers: Vec<ManeuverMass>,
}

#[derive(Debug, Serialize)]
pub struct JointMass {
    pub intention: Vec<IntentionView>,
    pub probability: f64,
}

#[derive(Debug, Serialize)]
pub struct PosteriorFrame {
    pub t: f64,
    pub reinitialized: bool,
    pub agents: Vec<AgentMarginals>,
    pub joint: Vec<JointMass>,
}

impl PosteriorFrame {
    pub fn new(frame: &FrameEstimate, graph: &LaneGraph) -> Self {
        let Some(post) = &frame.posterior else {
            return Self { t: frame.t, reinitialized: frame.reinitialized, agents: Vec::new(), joint: Vec::new() };
        };
        let agents = frame
            .agents
            .iter()
            .enumerate()
            .map(|(k, a)| AgentMarginals {
                id: a.id,
                candidates: a.candidates.iter().map(|r| lane_ids(graph, r)).collect(),
                routes: post.routes[k].clone(),
                unmatched: post.unmatched[k],
                maneuvers: post.maneuvers[k]
                    .iter()
                    .map(|(m, p)| ManeuverMass { order: orders(m), probability: *p })
                    .collect(),
            })
            .collect();
        let joint = post
            .joint
            .iter()
            .map(|(key, p)| JointMass { intention: intention_views(&post.agents, key), probability: *p })
            .collect();
        Self { t: frame.t, reinitialized: frame.reinitialized, agents, joint }
    }
}

#[derive(Debug, Serialize)]
pub struct PosteriorSeries {
    pub model: &'static str,
    /// Frames at which a degenerate belief forced re-initialization.
    pub warnings: usize,
    pub frames: Vec<PosteriorFrame>,
}

impl PosteriorSeries {
    pub fn new(run: &ModelRun, graph: &LaneGraph) -> Self {
        Self {
            model: run.kind.name(),
            warnings: run.reinitializations(),
            frames: run.frames.iter().map(|f| PosteriorFrame::new(f, graph)).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct HypothesisView {
    pub probability: f64,
    pub intention: Vec<IntentionView>,
    /// `trajectory[k][agent]` is `[x, y, theta, v]` at `t + (k + 1) * dt`.
    pub trajectory: Vec<Vec<[f64; 4]>>,
}

#[derive(Debug, Serialize)]
pub struct PredictionView {
    pub model: &'static str,
    pub t: f64,
    pub dt: f64,
    pub horizon: f64,
    pub agents: Vec<AgentId>,
    pub hypotheses: Vec<HypothesisView>,
}

impl PredictionView {
    pub fn new(model: &'static str, t: f64, set: &PredictionSet) -> Self {
        let hypotheses = set
            .hypotheses
            .iter()
            .map(|h| HypothesisView {
                probability: h.probability,
                intention: intention_views(&set.agents, &h.intention),
                trajectory: h.trajectory.iter().map(|step| step.iter().map(|s| s.as_array()).collect()).collect(),
            })
            .collect();
        Self { model, t, dt: set.dt, horizon: set.horizon, agents: set.agents.clone(), hypotheses }
    }
}

/// CSV record; `agent` is `all` for the scene-level row.
#[derive(Debug, Serialize)]
pub struct MetricRecord {
    pub t: f64,
    pub tau: f64,
    pub model: &'static str,
    pub agent: String,
    pub eps: f64,
    pub lik: f64,
    pub kld_route: Option<f64>,
    pub kld_maneuver: Option<f64>,
}

impl From<&MetricRow> for MetricRecord {
    fn from(r: &MetricRow) -> Self {
        Self {
            t: r.t,
            tau: r.tau,
            model: r.model.name(),
            agent: r.agent.map_or_else(|| "all".to_string(), |a| a.0.to_string()),
            eps: r.eps,
            lik: r.lik,
            kld_route: r.kld_route,
            kld_maneuver: r.kld_maneuver,
        }
    }
}

//! Metrics for route estimation and trajectory prediction, and the runners
//! that drive each model over a recorded scene.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::config::{InteractionMode, RunConfig};
use crate::forecast::{self, Prediction, PredictionSet, RolloutMode};
use crate::inference::{intention_posterior, Belief, FilterError, ParticleFilter, Posterior, TrackedAgent};
use crate::intent::ManeuverIntention;
use crate::kinematics::{self, AgentId, YawRateTracker};
use crate::lanegraph::{LaneGraph, LaneIdx, RoutePath};
use crate::math;
use crate::scenario::{to_state, SceneLog};

/// Lower clamp on the probability of the true intention.
pub const KLD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("true candidate {truth} outside an estimate over {len} candidates")]
    Misaligned { truth: usize, len: usize },
    #[error("estimate is not a distribution")]
    NotNormalized,
}

/// Divergence of an estimate from the one-hot truth, `-ln P(truth)`.
pub fn kld(estimate: &[f64], truth: usize) -> Result<f64, EvalError> {
    let p = *estimate.get(truth).ok_or(EvalError::Misaligned { truth, len: estimate.len() })?;
    let total: f64 = estimate.iter().sum();
    if estimate.iter().any(|p| !(0.0..=1.0 + 1e-9).contains(p)) || (total - 1.0).abs() > 1e-6 {
        return Err(EvalError::NotNormalized);
    }
    Ok(kld_from_mass(p))
}

/// `-ln P` for the probability mass `p` assigned to the truth.
pub fn kld_from_mass(p: f64) -> f64 {
    math::ln(1.0 / p.clamp(KLD_FLOOR, 1.0))
}

/// Positions of the true agents at one future instant.
pub type TruthPositions = [(AgentId, [f64; 2])];

fn squared_errors(pred: &Prediction, set: &PredictionSet, step: usize, truth: &TruthPositions) -> Option<f64> {
    let states = pred.trajectory.get(step.checked_sub(1)?)?;
    let mut sum = 0.0;
    let mut any = false;
    for (id, p) in truth {
        if let Some(k) = set.agent_index(*id) {
            let s = &states[k];
            let (dx, dy) = (s.x - p[0], s.y - p[1]);
            sum += dx * dx + dy * dy;
            any = true;
        }
    }
    any.then_some(sum)
}

/// Weighted RMSE over hypotheses of the predicted positions `step` steps
/// ahead, squared errors summed over the agents in `truth`.
pub fn weighted_rmse(set: &PredictionSet, step: usize, truth: &TruthPositions) -> Option<f64> {
    let mut acc = 0.0;
    for h in &set.hypotheses {
        acc += h.probability * squared_errors(h, set, step, truth)?;
    }
    Some(math::sqrt(acc))
}

/// Product over hypotheses of probability times the isotropic Gaussian
/// density of the true positions around the predicted ones.
pub fn weighted_likelihood(set: &PredictionSet, step: usize, truth: &TruthPositions, sigma: f64) -> Option<f64> {
    let mut acc = 1.0;
    for h in &set.hypotheses {
        let states = h.trajectory.get(step.checked_sub(1)?)?;
        let mut density = 1.0;
        for (id, p) in truth {
            let k = set.agent_index(*id)?;
            let s = &states[k];
            density *= math::exp(math::normal_logpdf(s.x - p[0], sigma) + math::normal_logpdf(s.y - p[1], sigma));
        }
        acc *= h.probability * density;
    }
    Some(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModelKind {
    Interactive,
    /// Interactive without maneuver branching: every agent yields.
    YieldOnly,
    MapBased,
    Ctrv,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Interactive, ModelKind::YieldOnly, ModelKind::MapBased, ModelKind::Ctrv];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Interactive => "interactive",
            ModelKind::YieldOnly => "yield_only",
            ModelKind::MapBased => "map_based",
            ModelKind::Ctrv => "ctrv",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    fn interaction(self) -> Option<InteractionMode> {
        match self {
            ModelKind::Interactive => Some(InteractionMode::Interactive),
            ModelKind::YieldOnly => Some(InteractionMode::YieldOnly),
            ModelKind::MapBased => Some(InteractionMode::MapBased),
            ModelKind::Ctrv => None,
        }
    }

    /// Configuration the model runs with.
    pub fn configure(self, config: &RunConfig) -> RunConfig {
        let mut c = *config;
        if let Some(mode) = self.interaction() {
            c.model.interaction = mode;
        }
        c
    }
}

/// Model output at one frame of the log.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEstimate {
    pub t: f64,
    /// Tracked agents with their reference candidates; empty for CTRV.
    pub agents: Vec<TrackedAgent>,
    pub posterior: Option<Posterior>,
    pub prediction: Option<PredictionSet>,
    pub reinitialized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRun {
    pub kind: ModelKind,
    pub frames: Vec<FrameEstimate>,
}

impl ModelRun {
    pub fn reinitializations(&self) -> usize {
        self.frames.iter().filter(|f| f.reinitialized).count()
    }
}

/// Runs a filter-based model over every frame of the log. With `predict`
/// set, a prediction set is produced at each frame as well.
pub fn run_filter(
    kind: ModelKind,
    log: &SceneLog,
    graph: &LaneGraph,
    config: &RunConfig,
    predict: bool,
) -> Result<ModelRun, FilterError> {
    let config = kind.configure(config);
    let filter = ParticleFilter::new(graph, config);
    let mut belief: Option<Belief> = None;
    let mut frames = Vec::with_capacity(log.frames.len());
    for frame in &log.frames {
        let zs = frame.measurements();
        if zs.is_empty() && belief.is_none() {
            frames.push(FrameEstimate { t: frame.t, agents: Vec::new(), posterior: None, prediction: None, reinitialized: false });
            continue;
        }
        let (b, reinit) = filter.step(belief.take(), &zs)?;
        let prediction = predict.then(|| forecast::predict_scene(&b, graph, &config, RolloutMode::Mean));
        frames.push(FrameEstimate {
            t: frame.t,
            agents: b.agents.clone(),
            posterior: Some(intention_posterior(&b)),
            prediction,
            reinitialized: reinit,
        });
        belief = Some(b);
    }
    Ok(ModelRun { kind, frames })
}

/// Constant turn rate and velocity extrapolation of every measured agent,
/// with the turn rate tracked from consecutive headings.
pub fn run_ctrv(log: &SceneLog, config: &RunConfig) -> ModelRun {
    let mut trackers: BTreeMap<AgentId, YawRateTracker> = BTreeMap::new();
    let steps = config.horizon_steps();
    let dt = config.model.dt;
    let frames = log
        .frames
        .iter()
        .map(|frame| {
            let mut agents = Vec::with_capacity(frame.agents.len());
            let mut rollouts = Vec::with_capacity(frame.agents.len());
            for a in &frame.agents {
                let z = to_state(a.z);
                let rate = trackers
                    .entry(a.id)
                    .or_insert_with(|| YawRateTracker::new(config.yaw_rate_smoothing))
                    .observe(frame.t, z.theta);
                agents.push(a.id);
                rollouts.push(kinematics::ctrv_predict(&z, rate, dt, steps));
            }
            let trajectory = (0..steps).map(|k| rollouts.iter().map(|r| r[k]).collect()).collect();
            let prediction = PredictionSet {
                dt,
                horizon: config.horizon,
                agents,
                hypotheses: alloc::vec![Prediction { probability: 1.0, intention: Vec::new(), trajectory }],
            };
            FrameEstimate { t: frame.t, agents: Vec::new(), posterior: None, prediction: Some(prediction), reinitialized: false }
        })
        .collect();
    ModelRun { kind: ModelKind::Ctrv, frames }
}

pub fn run_model(
    kind: ModelKind,
    log: &SceneLog,
    graph: &LaneGraph,
    config: &RunConfig,
    predict: bool,
) -> Result<ModelRun, FilterError> {
    match kind {
        ModelKind::Ctrv => Ok(run_ctrv(log, config)),
        _ => run_filter(kind, log, graph, config, predict),
    }
}

/// Route of lane ids resolved against the map; `None` if a lane is unknown.
pub fn resolve_route(graph: &LaneGraph, ids: &[alloc::string::String]) -> Option<RoutePath> {
    let lanes: Option<Vec<LaneIdx>> = ids.iter().map(|id| graph.lane_by_id(id)).collect();
    Some(RoutePath::new(graph, lanes?, 0.0, 0.0))
}

/// Index of the reference candidate the true route follows.
pub fn true_route_label(candidates: &[RoutePath], truth: &RoutePath) -> Option<usize> {
    candidates.iter().position(|c| c.consistent_with(truth))
}

/// Route and maneuver divergences of one agent at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntentionScore {
    pub route: Option<f64>,
    pub maneuver: Option<f64>,
    /// Probability of the true route.
    pub route_probability: Option<f64>,
    /// Probability of maneuvers consistent with the true passing orders.
    pub maneuver_probability: Option<f64>,
}

/// Scores the filter's intention estimate of `agent` against the log's
/// ground truth at frame `index`.
pub fn score_intentions(
    run: &ModelRun,
    index: usize,
    agent: AgentId,
    log: &SceneLog,
    graph: &LaneGraph,
) -> IntentionScore {
    let frame = &run.frames[index];
    let (Some(post), Some(gt)) = (&frame.posterior, log.frames[index].agent(agent)) else {
        return IntentionScore::default();
    };
    let Some(k) = post.agents.iter().position(|a| *a == agent) else {
        return IntentionScore::default();
    };
    let mut score = IntentionScore::default();
    if let Some(truth) = resolve_route(graph, &gt.gt.route) {
        if let Some(label) = true_route_label(&frame.agents[k].candidates, &truth) {
            let p = post.routes[k][label];
            score.route_probability = Some(p);
            score.route = Some(kld_from_mass(p));
        }
    }
    if run.kind.interaction().is_some_and(|m| m.uses_others()) {
        let truth = ManeuverIntention::new(gt.gt.order.iter().map(|(k, v)| (*k, *v)).collect());
        let p: f64 = post.maneuvers[k].iter().filter(|(m, _)| m.consistent_with(&truth)).map(|(_, p)| p).sum();
        score.maneuver_probability = Some(p);
        score.maneuver = Some(kld_from_mass(p));
    }
    score
}

/// One row of the metrics table. `agent == None` aggregates all agents.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub t: f64,
    pub tau: f64,
    pub model: ModelKind,
    pub agent: Option<AgentId>,
    pub eps: f64,
    pub lik: f64,
    pub kld_route: Option<f64>,
    pub kld_maneuver: Option<f64>,
}

/// Metrics of a model run for every frame and every prediction step whose
/// ground truth is in the log. Frames are assumed to be `dt` apart.
pub fn metric_rows(run: &ModelRun, log: &SceneLog, graph: &LaneGraph, sigma_eval: f64) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    for (f, est) in run.frames.iter().enumerate() {
        let Some(set) = &est.prediction else { continue };
        let scores: Vec<(AgentId, IntentionScore)> =
            set.agents.iter().map(|a| (*a, score_intentions(run, f, *a, log, graph))).collect();
        for step in 1..=set.steps() {
            let Some(future) = log.frames.get(f + step) else { break };
            let tau = step as f64 * set.dt;
            let truth: Vec<(AgentId, [f64; 2])> = set
                .agents
                .iter()
                .filter_map(|a| future.agent(*a).map(|g| (*a, [g.gt.x[0], g.gt.x[1]])))
                .collect();
            if truth.is_empty() {
                continue;
            }
            for (id, score) in &scores {
                let Some(p) = truth.iter().find(|(a, _)| a == id) else { continue };
                let one = [*p];
                let (Some(eps), Some(lik)) =
                    (weighted_rmse(set, step, &one), weighted_likelihood(set, step, &one, sigma_eval))
                else {
                    continue;
                };
                rows.push(MetricRow {
                    t: est.t,
                    tau,
                    model: run.kind,
                    agent: Some(*id),
                    eps,
                    lik,
                    kld_route: score.route,
                    kld_maneuver: score.maneuver,
                });
            }
            if let (Some(eps), Some(lik)) =
                (weighted_rmse(set, step, &truth), weighted_likelihood(set, step, &truth, sigma_eval))
            {
                rows.push(MetricRow { t: est.t, tau, model: run.kind, agent: None, eps, lik, kld_route: None, kld_maneuver: None });
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests;

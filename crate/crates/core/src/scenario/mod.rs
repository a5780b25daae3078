//! Closed-loop synthetic scenes: agents drive their true routes with the
//! nominal action of the behavior model, and a noisy sensor observes them.

pub mod archetypes;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::behavior::{ActionSamplerParams, IdmParams, PassingOrder};
use crate::config::{InteractionMode, ModelParams, RunConfig, SensorNoise};
use crate::context;
use crate::intent::ManeuverIntention;
use crate::kinematics::{self, AgentId, KinematicState, Measurement, NoiseConfig};
use crate::lanegraph::{LaneGraph, LaneIdx, RoutePath, MATCH_SLACK};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentSpec {
    pub id: AgentId,
    /// `[x, y, theta, v]` at the start of the scene.
    pub spawn: [f64; 4],
    /// Lane ids of the true route.
    pub route: Vec<String>,
    /// True passing order towards other agents.
    #[cfg_attr(feature = "serde", serde(default))]
    pub orders: BTreeMap<AgentId, PassingOrder>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub idm: Option<IdmParams>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub sampler: Option<ActionSamplerParams>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioSpec {
    pub name: String,
    /// Map the scene was written for, informational only.
    #[cfg_attr(feature = "serde", serde(default))]
    pub map: Option<String>,
    pub agents: Vec<AgentSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub sensor: SensorNoise,
    /// Process noise of the ground truth; only the process fields are used.
    #[cfg_attr(feature = "serde", serde(default = "ground_truth_noise"))]
    pub process_noise: NoiseConfig,
    pub duration: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

/// Small process noise that keeps ground-truth outcomes stable.
pub fn ground_truth_noise() -> NoiseConfig {
    NoiseConfig { sigma_x: 0.02, sigma_y: 0.02, sigma_theta: 0.002, sigma_v: 0.02, ..NoiseConfig::default() }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruth {
    /// True `[x, y, theta, v]`.
    pub x: [f64; 4],
    pub route: Vec<String>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub order: BTreeMap<AgentId, PassingOrder>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentFrame {
    pub id: AgentId,
    /// Measured `[x, y, theta, v]`.
    pub z: [f64; 4],
    pub gt: GroundTruth,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Frame {
    pub t: f64,
    pub agents: Vec<AgentFrame>,
    /// Agents whose track ended before this frame.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub departed: Vec<AgentId>,
}

impl Frame {
    pub fn measurements(&self) -> Vec<Measurement> {
        self.agents
            .iter()
            .map(|a| Measurement { agent: a.id, timestamp: self.t, z: to_state(a.z) })
            .collect()
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentFrame> {
        self.agents.iter().find(|a| a.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneLog {
    pub frames: Vec<Frame>,
}

impl SceneLog {
    /// Frame spacing, taken from the first two frames.
    pub fn dt(&self) -> Option<f64> {
        (self.frames.len() >= 2).then(|| self.frames[1].t - self.frames[0].t)
    }

    /// Index of the last frame at or before `t`.
    pub fn frame_at(&self, t: f64) -> Option<usize> {
        self.frames.iter().rposition(|f| f.t <= t + 1e-9)
    }

    pub fn agent_ids(&self) -> Vec<AgentId> {
        let mut ids: Vec<AgentId> = self.frames.iter().flat_map(|f| f.agents.iter().map(|a| a.id)).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Checks the structural invariants of a log.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (k, w) in self.frames.windows(2).enumerate() {
            if w[1].t.partial_cmp(&w[0].t) != Some(core::cmp::Ordering::Greater) {
                return Err(ScenarioError::Log { frame: k + 1, reason: "timestamps must increase" });
            }
        }
        for (k, f) in self.frames.iter().enumerate() {
            let finite = f.agents.iter().all(|a| a.z.iter().chain(a.gt.x.iter()).all(|v| v.is_finite()));
            if !finite {
                return Err(ScenarioError::Log { frame: k, reason: "non-finite state" });
            }
        }
        Ok(())
    }
}

pub fn to_state(a: [f64; 4]) -> KinematicState {
    KinematicState::new(a[0], a[1], a[2], a[3])
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("agent {agent}: unknown lane {lane}")]
    UnknownLane { agent: AgentId, lane: String },
    #[error("agent {agent}: lane {lane} does not follow its predecessor on the route")]
    BrokenRoute { agent: AgentId, lane: String },
    #[error("agent {0}: spawn state does not lie on the first route lane")]
    OffRoute(AgentId),
    #[error("agent {0}: empty route")]
    EmptyRoute(AgentId),
    #[error("duplicate agent {0}")]
    DuplicateAgent(AgentId),
    #[error("duration must be positive")]
    Duration,
    #[error("frame {frame}: {reason}")]
    Log { frame: usize, reason: &'static str },
}

struct TrueAgent {
    id: AgentId,
    state: KinematicState,
    route: RoutePath,
    lane_ids: Vec<String>,
    maneuver: ManeuverIntention,
    orders: BTreeMap<AgentId, PassingOrder>,
    params: ModelParams,
    active: bool,
}

fn true_route(graph: &LaneGraph, spec: &AgentSpec, horizon: f64) -> Result<RoutePath, ScenarioError> {
    if spec.route.is_empty() {
        return Err(ScenarioError::EmptyRoute(spec.id));
    }
    let mut lanes: Vec<LaneIdx> = Vec::with_capacity(spec.route.len());
    for id in &spec.route {
        let l = graph
            .lane_by_id(id)
            .ok_or_else(|| ScenarioError::UnknownLane { agent: spec.id, lane: id.clone() })?;
        if let Some(prev) = lanes.last() {
            if !graph.successors(*prev).contains(&l) {
                return Err(ScenarioError::BrokenRoute { agent: spec.id, lane: id.clone() });
            }
        }
        lanes.push(l);
    }
    let first = graph.lane(lanes[0]);
    let proj = first.centerline.project(to_state(spec.spawn).position());
    if proj.overshoot != 0.0 || proj.distance > 0.5 * first.width + MATCH_SLACK {
        return Err(ScenarioError::OffRoute(spec.id));
    }
    Ok(RoutePath::new(graph, lanes, proj.s, horizon))
}

/// Rolls the scenario forward and records ground truth plus noisy
/// measurements every `dt`. Agents driving past the end of their route
/// leave the scene.
pub fn simulate(spec: &ScenarioSpec, graph: &LaneGraph, config: &RunConfig) -> Result<SceneLog, ScenarioError> {
    if !(spec.duration > 0.0 && spec.duration.is_finite()) {
        return Err(ScenarioError::Duration);
    }
    let mut agents: Vec<TrueAgent> = Vec::with_capacity(spec.agents.len());
    for a in &spec.agents {
        if agents.iter().any(|t| t.id == a.id) {
            return Err(ScenarioError::DuplicateAgent(a.id));
        }
        let mut params = ModelParams { interaction: InteractionMode::Interactive, ..config.model };
        if let Some(idm) = a.idm {
            params.idm = idm;
        }
        if let Some(s) = a.sampler {
            params.sampler = s;
        }
        agents.push(TrueAgent {
            id: a.id,
            state: to_state(a.spawn),
            route: true_route(graph, a, config.route_horizon)?,
            lane_ids: a.route.clone(),
            maneuver: ManeuverIntention::new(a.orders.iter().map(|(k, v)| (*k, *v)).collect()),
            orders: a.orders.clone(),
            params,
            active: true,
        });
    }
    agents.sort_by_key(|a| a.id);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dt = config.model.dt;
    let steps = libm::round(spec.duration / dt) as usize;
    let mut log = SceneLog::default();
    let mut departed: Vec<AgentId> = Vec::new();
    for k in 0..=steps {
        let t = k as f64 * dt;
        let mut frame = Frame { t, agents: Vec::new(), departed: core::mem::take(&mut departed) };
        for a in agents.iter().filter(|a| a.active) {
            let s = &a.state;
            let z = [
                math::sample_normal(&mut rng, s.x, spec.sensor.sigma_xy),
                math::sample_normal(&mut rng, s.y, spec.sensor.sigma_xy),
                math::wrap_angle(math::sample_normal(&mut rng, s.theta, spec.sensor.sigma_theta)),
                math::sample_normal(&mut rng, s.v, spec.sensor.sigma_v).max(0.0),
            ];
            frame.agents.push(AgentFrame {
                id: a.id,
                z,
                gt: GroundTruth { x: s.as_array(), route: a.lane_ids.clone(), order: a.orders.clone() },
            });
        }
        log.frames.push(frame);
        if k == steps {
            break;
        }

        let ids: Vec<AgentId> = agents.iter().filter(|a| a.active).map(|a| a.id).collect();
        let states: Vec<KinematicState> = agents.iter().filter(|a| a.active).map(|a| a.state).collect();
        let cands: Vec<Vec<RoutePath>> =
            states.iter().map(|s| context::candidate_routes(graph, s, config.route_horizon)).collect();
        let mut actions = Vec::with_capacity(ids.len());
        for (i, a) in agents.iter().filter(|a| a.active).enumerate() {
            let views = context::views_except(i, &ids, &states, &cands);
            let conflicts = context::conflicts_for(graph, &a.state, &a.route, &views, &a.params);
            let others = context::states_except(i, &states);
            let ctx = context::action_context(graph, &a.state, &a.route, &a.maneuver, &conflicts, &others, &a.params);
            actions.push(ctx.nominal(a.state.v, &a.params));
        }
        for (a, action) in agents.iter_mut().filter(|a| a.active).zip(&actions) {
            a.state = kinematics::step(&a.state, action, dt, &spec.process_noise, &mut rng);
            let pose = a.route.project(graph, a.state.position());
            if pose.overshoot > 0.0 {
                a.active = false;
                departed.push(a.id);
            }
        }
    }
    Ok(log)
}

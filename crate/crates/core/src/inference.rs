//! Sequential importance resampling over joint scene hypotheses.
//!
//! Each particle holds, for every tracked agent, a kinematic state, a route,
//! a passing-order maneuver and the last action. Random numbers come from
//! counter-based streams keyed by seed, purpose, particle and step, so the
//! result does not depend on the order in which particles are processed.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, SensorNoise};
use crate::context::{self, RouteAdvance};
use crate::intent::{self, ManeuverIntention};
use crate::kinematics::{self, Action, AgentId, KinematicState, Measurement};
use crate::lanegraph::{LaneGraph, RoutePath};
use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FilterError {
    #[error(transparent)]
    Intent(#[from] intent::IntentError),
    #[error("all particle weights vanished")]
    DegenerateBelief,
    #[error("no measurements to initialise from")]
    NoMeasurements,
}

/// Random-stream purposes.
mod stream {
    pub const INIT: u64 = 1;
    pub const PREDICT: u64 = 2;
    pub const LABEL: u64 = 3;
    pub const RESAMPLE: u64 = 4;
    pub const REJUVENATE: u64 = 5;
    pub const INJECT: u64 = 6;
}

/// Independent random stream for `(seed, purpose, index, step)`.
pub fn stream_rng(seed: u64, purpose: u64, index: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng.set_word_pos(u128::from(step) << 40);
    rng
}

/// One agent inside one particle.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentHypothesis {
    pub state: KinematicState,
    pub route: RoutePath,
    /// Index of the consistent reference candidate of the agent, if any.
    pub label: Option<usize>,
    pub maneuver: ManeuverIntention,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub agents: Vec<AgentHypothesis>,
    pub weight: f64,
}

/// Agent known to the belief, with the routes it may follow as seen from
/// its latest measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedAgent {
    pub id: AgentId,
    pub candidates: Vec<RoutePath>,
    pub last_measurement: KinematicState,
    /// Consecutive frames without a measurement.
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    pub agents: Vec<TrackedAgent>,
    pub particles: Vec<Particle>,
    pub timestamp: f64,
    pub step: u64,
}

impl Belief {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn agent_ids(&self) -> Vec<AgentId> {
        self.agents.iter().map(|a| a.id).collect()
    }

    pub fn agent_index(&self, id: AgentId) -> Option<usize> {
        self.agents.iter().position(|a| a.id == id)
    }

    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub fn effective_sample_size(&self) -> f64 {
        let s: f64 = self.total_weight();
        let s2: f64 = self.particles.iter().map(|p| p.weight * p.weight).sum();
        if s2 > 0.0 {
            s * s / s2
        } else {
            0.0
        }
    }
}

/// Per-agent intention of one particle: route label and maneuver.
pub type AgentIntention = (Option<usize>, ManeuverIntention);

/// Probability of every intention combination present in the belief, with
/// per-agent marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub agents: Vec<AgentId>,
    pub joint: Vec<(Vec<AgentIntention>, f64)>,
    /// Per agent, probability of each reference candidate route.
    pub routes: Vec<Vec<f64>>,
    /// Per agent, mass on routes consistent with none of the candidates.
    pub unmatched: Vec<f64>,
    pub maneuvers: Vec<Vec<(ManeuverIntention, f64)>>,
}

impl Posterior {
    /// Route marginal of one agent, if tracked.
    pub fn route_marginal(&self, id: AgentId) -> Option<&[f64]> {
        self.agents.iter().position(|a| *a == id).map(|k| self.routes[k].as_slice())
    }
}

/// Joint intention probabilities: the normalised weight sum over all
/// particles sharing a combination.
pub fn intention_posterior(belief: &Belief) -> Posterior {
    let total = belief.total_weight();
    let mut joint: BTreeMap<Vec<AgentIntention>, f64> = BTreeMap::new();
    for p in &belief.particles {
        let key: Vec<AgentIntention> = p.agents.iter().map(|a| (a.label, a.maneuver.clone())).collect();
        *joint.entry(key).or_insert(0.0) += p.weight;
    }
    let n = belief.agents.len();
    let mut routes: Vec<Vec<f64>> = belief.agents.iter().map(|a| alloc::vec![0.0; a.candidates.len()]).collect();
    let mut unmatched = alloc::vec![0.0; n];
    let mut maneuvers: Vec<BTreeMap<ManeuverIntention, f64>> = alloc::vec![BTreeMap::new(); n];
    let joint: Vec<(Vec<AgentIntention>, f64)> = joint.into_iter().map(|(k, w)| (k, w / total)).collect();
    for (key, p) in &joint {
        for (a, (label, m)) in key.iter().enumerate() {
            match label {
                Some(k) if *k < routes[a].len() => routes[a][*k] += p,
                _ => unmatched[a] += p,
            }
            *maneuvers[a].entry(m.clone()).or_insert(0.0) += p;
        }
    }
    Posterior {
        agents: belief.agent_ids(),
        joint,
        routes,
        unmatched,
        maneuvers: maneuvers.into_iter().map(|m| m.into_iter().collect()).collect(),
    }
}

/// Standard deviations used to scatter fresh particles around a measurement.
#[derive(Debug, Clone, Copy)]
struct Spread {
    x: f64,
    y: f64,
    theta: f64,
    v: f64,
}

impl From<&SensorNoise> for Spread {
    fn from(s: &SensorNoise) -> Self {
        Self { x: s.sigma_xy, y: s.sigma_xy, theta: s.sigma_theta, v: s.sigma_v }
    }
}

fn scatter<R: Rng + ?Sized>(z: &KinematicState, s: Spread, rng: &mut R) -> KinematicState {
    KinematicState::new(
        math::sample_normal(rng, z.x, s.x),
        math::sample_normal(rng, z.y, s.y),
        math::sample_normal(rng, z.theta, s.theta),
        math::sample_normal(rng, z.v, s.v),
    )
}

fn pick<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, p) in probs.iter().enumerate() {
        if u < *p {
            return k;
        }
        u -= p;
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Particle filter bound to a map and a configuration.
#[derive(Debug, Clone)]
pub struct ParticleFilter<'g> {
    graph: &'g LaneGraph,
    config: RunConfig,
}

impl<'g> ParticleFilter<'g> {
    pub fn new(graph: &'g LaneGraph, config: RunConfig) -> Self {
        Self { graph, config }
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn graph(&self) -> &'g LaneGraph {
        self.graph
    }

    fn measurement_spread(&self) -> Spread {
        let n = &self.config.noise;
        Spread { x: n.sigma_zx, y: n.sigma_zy, theta: n.sigma_ztheta, v: n.sigma_zv }
    }

    fn track(&self, z: &Measurement) -> Result<TrackedAgent, FilterError> {
        let candidates = context::candidate_routes(self.graph, &z.z, self.config.route_horizon);
        intent::route_prior(z.agent, &candidates)?;
        Ok(TrackedAgent { id: z.agent, candidates, last_measurement: z.z, missing: 0 })
    }

    /// Draws the particle set from the first measurements: states from the
    /// measurement distribution, uniform routes and maneuvers, sampled actions.
    pub fn init(&self, measurements: &[Measurement]) -> Result<Belief, FilterError> {
        if measurements.is_empty() {
            return Err(FilterError::NoMeasurements);
        }
        let mut sorted: Vec<&Measurement> = measurements.iter().collect();
        sorted.sort_by_key(|m| m.agent);
        sorted.dedup_by_key(|m| m.agent);
        let agents = sorted.iter().map(|z| self.track(z)).collect::<Result<Vec<_>, _>>()?;
        let zs: Vec<KinematicState> = sorted.iter().map(|m| m.z).collect();
        let n = self.config.particles;
        let weight = 1.0 / n as f64;
        let spread = self.measurement_spread();
        let particles = (0..n)
            .map(|i| {
                let mut rng = stream_rng(self.config.seed, stream::INIT, i as u64, 0);
                Particle { agents: self.fresh_agents(&agents, &zs, spread, &mut rng), weight }
            })
            .collect();
        Ok(Belief { agents, particles, timestamp: sorted[0].timestamp, step: 0 })
    }

    fn fresh_agents<R: Rng + ?Sized>(
        &self,
        agents: &[TrackedAgent],
        zs: &[KinematicState],
        spread: Spread,
        rng: &mut R,
    ) -> Vec<AgentHypothesis> {
        let mut out: Vec<AgentHypothesis> = agents
            .iter()
            .zip(zs)
            .map(|(a, z)| {
                let state = scatter(z, spread, rng);
                let k = rng.gen_range(0..a.candidates.len());
                AgentHypothesis {
                    state,
                    route: a.candidates[k].clone(),
                    label: Some(k),
                    maneuver: ManeuverIntention::default(),
                    action: Action::default(),
                }
            })
            .collect();
        let params = &self.config.model;
        let ids: Vec<AgentId> = agents.iter().map(|a| a.id).collect();
        let states: Vec<KinematicState> = out.iter().map(|a| a.state).collect();
        let cands: Vec<Vec<RoutePath>> = agents.iter().map(|a| a.candidates.clone()).collect();
        for (i, agent) in out.iter_mut().enumerate() {
            let views = context::views_except(i, &ids, &states, &cands);
            let conflicts = context::conflicts_for(self.graph, &agent.state, &agent.route, &views, params);
            let set = context::maneuvers_for(&conflicts, agent.state.v, params);
            agent.maneuver = set[rng.gen_range(0..set.len())].clone();
            let others = context::states_except(i, &states);
            let ctx = context::action_context(
                self.graph,
                &agent.state,
                &agent.route,
                &agent.maneuver,
                &conflicts,
                &others,
                params,
            );
            agent.action = ctx.sample(agent.state.v, params, rng);
        }
        out
    }

    /// Propagates every particle by one step: route and maneuver
    /// transitions, action sampling, and the noisy kinematic update. All
    /// agents act on the same previous joint state.
    pub fn predict(&self, belief: &mut Belief) {
        belief.step += 1;
        belief.timestamp += self.config.model.dt;
        let ids = belief.agent_ids();
        let cands: Vec<Vec<RoutePath>> = belief.agents.iter().map(|a| a.candidates.clone()).collect();
        let step = belief.step;
        for (i, p) in belief.particles.iter_mut().enumerate() {
            let mut rng = stream_rng(self.config.seed, stream::PREDICT, i as u64, step);
            self.predict_particle(p, &ids, &cands, &mut rng);
        }
    }

    fn predict_particle<R: Rng + ?Sized>(
        &self,
        particle: &mut Particle,
        ids: &[AgentId],
        cands: &[Vec<RoutePath>],
        rng: &mut R,
    ) {
        let params = &self.config.model;
        for agent in particle.agents.iter_mut() {
            if let RouteAdvance::Extend(options) =
                context::advance_route(self.graph, &agent.route, &agent.state, self.config.route_horizon)
            {
                if !options.is_empty() {
                    let probs: Vec<f64> = options.iter().map(|o| o.1).collect();
                    agent.route = options[pick(&probs, rng)].0.clone();
                }
            }
        }
        let states: Vec<KinematicState> = particle.agents.iter().map(|a| a.state).collect();
        for (i, agent) in particle.agents.iter_mut().enumerate() {
            let views = context::views_except(i, ids, &states, cands);
            let conflicts = context::conflicts_for(self.graph, &agent.state, &agent.route, &views, params);
            let set = context::maneuvers_for(&conflicts, agent.state.v, params);
            let probs = intent::match_maneuver(&agent.maneuver, &set);
            agent.maneuver = set[pick(&probs, rng)].clone();
            let others = context::states_except(i, &states);
            let ctx = context::action_context(
                self.graph,
                &agent.state,
                &agent.route,
                &agent.maneuver,
                &conflicts,
                &others,
                params,
            );
            agent.action = ctx.sample(agent.state.v, params, rng);
        }
        for agent in particle.agents.iter_mut() {
            agent.state = kinematics::step(&agent.state, &agent.action, params.dt, &self.config.noise, rng);
        }
    }

    /// Multiplies weights by the measurement likelihood (in log space) and
    /// normalises them. Agents without a measurement contribute a factor 1.
    pub fn update(&self, belief: &mut Belief, measurements: &[Measurement]) -> Result<(), FilterError> {
        let zs: Vec<Option<KinematicState>> = belief
            .agents
            .iter()
            .map(|a| measurements.iter().find(|m| m.agent == a.id).map(|m| m.z))
            .collect();
        let noise = &self.config.noise;
        let log_w: Vec<f64> = belief
            .particles
            .iter()
            .map(|p| {
                let ll: f64 = p
                    .agents
                    .iter()
                    .zip(&zs)
                    .filter_map(|(a, z)| z.map(|z| kinematics::measurement_logpdf(&a.state, &z, noise)))
                    .sum();
                math::ln(p.weight) + ll
            })
            .collect();
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(FilterError::DegenerateBelief);
        }
        let mut total = 0.0;
        for (p, lw) in belief.particles.iter_mut().zip(&log_w) {
            p.weight = math::exp(lw - max);
            total += p.weight;
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(FilterError::DegenerateBelief);
        }
        for p in &mut belief.particles {
            p.weight /= total;
        }
        Ok(())
    }

    /// Systematic resampling when the effective sample size drops below
    /// half the particle count. Returns whether it resampled.
    pub fn resample(&self, belief: &mut Belief) -> bool {
        let n = belief.particles.len();
        if n == 0 || belief.effective_sample_size() >= 0.5 * n as f64 {
            return false;
        }
        let mut rng = stream_rng(self.config.seed, stream::RESAMPLE, 0, belief.step);
        belief.particles = systematic_resample(&belief.particles, &mut rng);
        true
    }

    /// Replaces each particle with probability `rejuvenation` by a fresh
    /// sample around the current measurements. Returns the replaced count.
    pub fn rejuvenate(&self, belief: &mut Belief) -> usize {
        let p_rej = self.config.rejuvenation;
        if p_rej <= 0.0 || belief.particles.is_empty() {
            return 0;
        }
        let zs: Vec<KinematicState> = belief.agents.iter().map(|a| a.last_measurement).collect();
        let weight = belief.total_weight() / belief.particles.len() as f64;
        let spread = Spread::from(&self.config.rejuvenation_noise);
        let mut replaced = 0;
        for i in 0..belief.particles.len() {
            let mut rng = stream_rng(self.config.seed, stream::REJUVENATE, i as u64, belief.step);
            if rng.gen::<f64>() < p_rej {
                belief.particles[i] = Particle { agents: self.fresh_agents(&belief.agents, &zs, spread, &mut rng), weight };
                replaced += 1;
            }
        }
        replaced
    }

    /// Brings the tracked agent set in line with a frame: refreshes the
    /// reference candidates of measured agents, injects new agents into
    /// every particle and drops agents missing for too long.
    pub fn sync_agents(&self, belief: &mut Belief, measurements: &[Measurement]) -> Result<(), FilterError> {
        for a in &mut belief.agents {
            match measurements.iter().find(|m| m.agent == a.id) {
                Some(m) => {
                    a.missing = 0;
                    a.last_measurement = m.z;
                    let c = context::candidate_routes(self.graph, &m.z, self.config.route_horizon);
                    if !c.is_empty() {
                        a.candidates = c;
                    }
                }
                None => a.missing += 1,
            }
        }
        let limit = self.config.departure_frames;
        while let Some(k) = belief.agents.iter().position(|a| a.missing > limit) {
            belief.agents.remove(k);
            for p in &mut belief.particles {
                p.agents.remove(k);
            }
        }

        let mut fresh: Vec<&Measurement> =
            measurements.iter().filter(|m| belief.agent_index(m.agent).is_none()).collect();
        fresh.sort_by_key(|m| m.agent);
        fresh.dedup_by_key(|m| m.agent);
        let spread = self.measurement_spread();
        for z in fresh {
            let tracked = self.track(z)?;
            let k = belief.agents.partition_point(|a| a.id < z.agent);
            for (i, p) in belief.particles.iter_mut().enumerate() {
                let mut rng = stream_rng(self.config.seed, stream::INJECT ^ (u64::from(z.agent.0) << 8), i as u64, belief.step);
                let r = rng.gen_range(0..tracked.candidates.len());
                p.agents.insert(
                    k,
                    AgentHypothesis {
                        state: scatter(&z.z, spread, &mut rng),
                        route: tracked.candidates[r].clone(),
                        label: Some(r),
                        maneuver: ManeuverIntention::default(),
                        action: Action::default(),
                    },
                );
            }
            belief.agents.insert(k, tracked);
        }
        self.relabel(belief);
        Ok(())
    }

    /// Aligns each particle's routes with the reference candidates. When a
    /// route is consistent with several candidates it is extended by one of
    /// them, chosen uniformly.
    pub fn relabel(&self, belief: &mut Belief) {
        let step = belief.step;
        for (i, p) in belief.particles.iter_mut().enumerate() {
            let mut rng = stream_rng(self.config.seed, stream::LABEL, i as u64, step);
            for (agent, tracked) in p.agents.iter_mut().zip(&belief.agents) {
                let hits: Vec<usize> = tracked
                    .candidates
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| agent.route.consistent_with(c))
                    .map(|(k, _)| k)
                    .collect();
                agent.label = match hits.len() {
                    0 => None,
                    1 => Some(hits[0]),
                    n => {
                        let k = hits[rng.gen_range(0..n)];
                        agent.route = agent.route.extended_by(self.graph, &tracked.candidates[k]);
                        Some(k)
                    }
                };
            }
        }
    }

    /// Full filter cycle for one frame. A degenerate belief is re-initialised
    /// from the frame; the returned flag reports that event.
    pub fn step(&self, belief: Option<Belief>, measurements: &[Measurement]) -> Result<(Belief, bool), FilterError> {
        let Some(mut belief) = belief else {
            return Ok((self.init(measurements)?, false));
        };
        self.predict(&mut belief);
        self.sync_agents(&mut belief, measurements)?;
        if let Err(FilterError::DegenerateBelief) = self.update(&mut belief, measurements) {
            let mut fresh = self.init(measurements)?;
            fresh.step = belief.step;
            fresh.timestamp = belief.timestamp;
            return Ok((fresh, true));
        }
        self.resample(&mut belief);
        self.rejuvenate(&mut belief);
        Ok((belief, false))
    }
}

/// Systematic resampling: `N` equally spaced pointers with one random
/// offset; weights reset to `1/N`.
pub fn systematic_resample<R: Rng + ?Sized>(particles: &[Particle], rng: &mut R) -> Vec<Particle> {
    let n = particles.len();
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    let step = total / n as f64;
    let mut u = rng.gen::<f64>() * step;
    let mut out = Vec::with_capacity(n);
    let mut acc = particles[0].weight;
    let mut k = 0;
    for _ in 0..n {
        while u > acc && k + 1 < n {
            k += 1;
            acc += particles[k].weight;
        }
        let mut p = particles[k].clone();
        p.weight = 1.0 / n as f64;
        out.push(p);
        u += step;
    }
    out
}

#[cfg(test)]
mod tests;

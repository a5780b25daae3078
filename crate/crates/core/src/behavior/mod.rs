//! Context-dependent action model. Every influence bounds the acceleration
//! to a range; the ranges are intersected and an action is drawn close to
//! the upper end of the result.

use rand::Rng;

use crate::kinematics::Action;
use crate::math::{self, TruncatedNormal};

/// Intelligent-driver-model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdmParams {
    /// Minimum spacing `d_d` (m).
    pub min_gap: f64,
    /// Desired time headway `T_d` (s).
    pub headway: f64,
    /// Comfortable acceleration `a_d` (m/s²).
    pub accel: f64,
    /// Braking deceleration `b_d` (m/s², negative).
    pub decel: f64,
    /// Acceleration exponent `delta`.
    pub exponent: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self { min_gap: 2.0, headway: 0.1, accel: 0.7, decel: -0.5, exponent: 4.0 }
    }
}

impl IdmParams {
    pub fn is_valid(&self) -> bool {
        self.min_gap > 0.0 && self.headway >= 0.0 && self.accel > 0.0 && self.decel < 0.0 && self.exponent > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActionSamplerParams {
    pub sigma_accel: f64,
    pub sigma_yaw_rate: f64,
    pub lat_accel_max: f64,
    pub accel_min: f64,
    pub accel_max: f64,
    /// Minimum time gap between two agents passing a conflict area (s).
    pub time_gap: f64,
    /// Yaw-rate feedback on heading error (1/s).
    pub heading_gain: f64,
    /// Yaw-rate feedback on lateral offset (1/s).
    pub lateral_gain: f64,
}

impl Default for ActionSamplerParams {
    fn default() -> Self {
        Self {
            sigma_accel: 1.5,
            sigma_yaw_rate: 0.05,
            lat_accel_max: 2.0,
            accel_min: -6.0,
            accel_max: 3.0,
            time_gap: 2.0,
            heading_gain: 1.5,
            lateral_gain: 0.6,
        }
    }
}

impl ActionSamplerParams {
    pub fn is_valid(&self) -> bool {
        self.sigma_accel > 0.0
            && self.sigma_yaw_rate > 0.0
            && self.lat_accel_max > 0.0
            && self.accel_min < 0.0
            && self.accel_max > 0.0
            && self.time_gap > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Influence {
    VehicleDynamics,
    SpeedLimit,
    Preceding,
    Curvature,
    Conflict,
}

/// Feasible acceleration interval contributed by one influence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelRange {
    pub min: f64,
    pub max: f64,
    pub source: Influence,
}

impl AccelRange {
    pub fn new(min: f64, max: f64, source: Influence) -> Self {
        Self { min, max, source }
    }

    pub fn unbounded(source: Influence) -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY, source)
    }

    pub fn upper(max: f64, source: Influence) -> Self {
        Self::new(f64::NEG_INFINITY, max, source)
    }

    pub fn vehicle_dynamics(params: &ActionSamplerParams) -> Self {
        Self::new(params.accel_min, params.accel_max, Influence::VehicleDynamics)
    }
}

/// Upper acceleration bound from the intelligent driver model. Pass
/// `gap = f64::INFINITY` for a free road; a red light or stop line is a
/// standing leader (`leader_speed = 0`) at the line.
pub fn idm_max_accel(v: f64, v_lim: f64, gap: f64, leader_speed: f64, p: &IdmParams) -> f64 {
    let free = 1.0 - math::powf(v / v_lim, p.exponent);
    if !gap.is_finite() {
        return p.accel * free;
    }
    // Negative dynamic spacing (leader pulling away) is clamped at zero.
    let dynamic = (v * p.headway + v * (v - leader_speed) / (2.0 * math::sqrt((p.accel * p.decel).abs()))).max(0.0);
    let desired = p.min_gap + dynamic;
    let ratio = desired / gap.max(1e-3);
    p.accel * (free - ratio * ratio)
}

/// Largest acceleration held for one step `dt` after which braking at
/// `decel` reaches `target` speed exactly at distance `dist`. `None` when no
/// real solution exists.
pub fn reach_speed_accel(v: f64, target: f64, dist: f64, dt: f64, decel: f64) -> Option<f64> {
    let disc = 4.0 * v * dt * decel + dt * dt * decel * decel - 8.0 * decel * dist + 4.0 * target * target;
    if disc < 0.0 {
        return None;
    }
    Some((-2.0 * v + dt * decel + math::sqrt(disc)) / (2.0 * dt))
}

/// Upper bound from road curvature: for each `(distance, radius)` ahead, the
/// agent must still be able to slow to `sqrt(radius * lat_accel_max)` by the
/// time it gets there. Returns `+inf` when nothing binds.
pub fn curvature_max_accel<I>(v: f64, pairs: I, dt: f64, idm: &IdmParams, params: &ActionSamplerParams) -> f64
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut bound = f64::INFINITY;
    for (dist, radius) in pairs {
        let v_curve = math::sqrt(radius * params.lat_accel_max);
        // Speed the agent could reach at that point accelerating flat out.
        let reachable = math::sqrt(v * v + 2.0 * params.accel_max * dist);
        if v_curve >= reachable {
            continue;
        }
        let a = reach_speed_accel(v, v_curve, dist, dt, idm.decel).unwrap_or(params.accel_min);
        bound = bound.min(a);
    }
    bound
}

/// Which agent passes a shared conflict area first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PassingOrder {
    SelfFirst,
    OtherFirst,
}

/// Self-side features for the conflict influence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictApproach {
    pub v: f64,
    /// Distance from the front bumper to the yield line ahead, if any.
    pub d_yield: Option<f64>,
}

/// One conflict with another agent. Entry distances are measured to the
/// front bumper, exit distances to the rear bumper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictingAgent {
    pub order: PassingOrder,
    pub self_entry: f64,
    pub self_exit: f64,
    pub other_entry: f64,
    pub other_exit: f64,
    pub other_v: f64,
}

/// Agents slower than this are treated as standing when predicting their
/// conflict timing.
pub const STANDING_SPEED: f64 = 0.1;
/// Stop this far before the conflict entry when no yield line applies.
const STOP_MARGIN: f64 = 0.5;

/// Acceleration held for one step, then coasting, that covers `dist` in
/// exactly `t` seconds.
pub fn reach_time_accel(v: f64, dist: f64, t: f64, dt: f64) -> f64 {
    if t <= dt {
        return 2.0 * (dist - v * t) / (t * t);
    }
    (dist - v * t) / (dt * t - 0.5 * dt * dt)
}

/// Constant deceleration that stops the agent after `dist` metres.
pub fn stop_accel(v: f64, dist: f64, dt: f64) -> f64 {
    if dist <= 0.1 {
        return -v / dt;
    }
    -(v * v) / (2.0 * dist)
}

/// Conflict influence. Priority agents are unconstrained; otherwise every
/// agent passing first caps the acceleration, every agent passing after
/// raises the floor, so that a time gap separates both passages.
pub fn conflict_accel_bounds(
    me: &ConflictApproach,
    others: &[ConflictingAgent],
    has_priority: bool,
    dt: f64,
    params: &ActionSamplerParams,
) -> AccelRange {
    let mut range = AccelRange::unbounded(Influence::Conflict);
    if has_priority {
        return range;
    }
    let v = me.v;
    for c in others {
        match c.order {
            PassingOrder::OtherFirst => {
                if c.other_exit <= 0.0 || c.self_entry <= 0.0 {
                    continue;
                }
                let stop = || {
                    let d = me.d_yield.filter(|d| *d >= 0.0 && *d <= c.self_entry).unwrap_or(c.self_entry - STOP_MARGIN);
                    stop_accel(v, d, dt)
                };
                let bound = if c.other_v > STANDING_SPEED {
                    let t_ready = c.other_exit / c.other_v + params.time_gap;
                    let a = reach_time_accel(v, c.self_entry, t_ready, dt);
                    if a < params.accel_min || a < -v / dt {
                        stop()
                    } else {
                        a
                    }
                } else {
                    stop()
                };
                range.max = range.max.min(bound);
            }
            PassingOrder::SelfFirst => {
                if c.self_exit <= 0.0 || c.other_entry <= 0.0 || c.other_v <= STANDING_SPEED {
                    continue;
                }
                let t_clear = c.other_entry / c.other_v - params.time_gap;
                let bound =
                    if t_clear <= dt { params.accel_max } else { reach_time_accel(v, c.self_exit, t_clear, dt) };
                range.min = range.min.max(bound);
            }
        }
    }
    range
}

/// Intersects influence ranges. An empty intersection collapses onto the
/// tightest upper bound.
pub fn combine_ranges(ranges: &[AccelRange]) -> AccelRange {
    let mut out = AccelRange::unbounded(Influence::VehicleDynamics);
    let mut lower = f64::NEG_INFINITY;
    for r in ranges {
        if r.max < out.max {
            out.max = r.max;
            out.source = r.source;
        }
        lower = lower.max(r.min);
    }
    out.min = lower.min(out.max);
    out
}

/// Agent pose relative to the centerline it follows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LanePose {
    /// Signed lateral offset, positive to the left.
    pub lateral: f64,
    /// Heading minus centerline heading, wrapped.
    pub heading_error: f64,
    /// Signed centerline curvature at the foot point.
    pub curvature: f64,
}

/// Mean yaw rate: follow the centerline curvature and feed back heading
/// error and lateral offset.
pub fn mean_yaw_rate(pose: &LanePose, v: f64, params: &ActionSamplerParams) -> f64 {
    pose.curvature * v - params.heading_gain * pose.heading_error - params.lateral_gain * pose.lateral / v.max(1.0)
}

/// Acceleration distribution: normal centred one standard deviation below
/// the upper bound, truncated to the range.
pub fn accel_distribution(range: &AccelRange, params: &ActionSamplerParams) -> TruncatedNormal {
    let hi = range.max.min(params.accel_max);
    let lo = range.min.max(params.accel_min).min(hi);
    TruncatedNormal::new(hi - params.sigma_accel, params.sigma_accel, lo, hi)
}

/// Draws an action for the given feasible range and lane-relative pose.
pub fn sample_action<R: Rng + ?Sized>(
    range: &AccelRange,
    pose: &LanePose,
    v: f64,
    params: &ActionSamplerParams,
    rng: &mut R,
) -> Action {
    let accel = accel_distribution(range, params).sample(rng);
    let yaw_rate = math::sample_normal(rng, mean_yaw_rate(pose, v, params), params.sigma_yaw_rate);
    Action { accel, yaw_rate }
}

/// Noise-free action used by deterministic rollouts: the agent drives at the
/// tightest upper bound and follows its lane.
pub fn nominal_action(range: &AccelRange, pose: &LanePose, v: f64, params: &ActionSamplerParams) -> Action {
    let hi = range.max.min(params.accel_max);
    Action { accel: hi.max(range.min.min(hi)), yaw_rate: mean_yaw_rate(pose, v, params) }
}

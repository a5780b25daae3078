//! Agent kinematic state, the stochastic transition model, the measurement
//! model, and the constant-turn-rate-and-velocity (CTRV) extrapolation.

use alloc::vec::Vec;

use rand::Rng;

use crate::geometry::Vec2;
use crate::math;

/// Identifier of a tracked road agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct AgentId(pub u32);

impl core::fmt::Display for AgentId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Pose and speed of one agent. Vehicle extent is not part of the state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KinematicState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

impl KinematicState {
    pub fn new(x: f64, y: f64, theta: f64, v: f64) -> Self {
        Self { x, y, theta: math::wrap_angle(theta), v: v.max(0.0) }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.theta, self.v]
    }
}

/// Longitudinal acceleration and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Action {
    pub accel: f64,
    pub yaw_rate: f64,
}

/// Process (`Q`) and measurement (`R`) standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseConfig {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_theta: f64,
    pub sigma_v: f64,
    pub sigma_zx: f64,
    pub sigma_zy: f64,
    pub sigma_ztheta: f64,
    pub sigma_zv: f64,
}

#[allow(clippy::approx_constant)]
impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_x: 0.5,
            sigma_y: 0.5,
            sigma_theta: 0.05,
            sigma_v: 1.5,
            sigma_zx: 15.0,
            sigma_zy: 15.0,
            sigma_ztheta: 3.14,
            sigma_zv: 15.0,
        }
    }
}

impl NoiseConfig {
    /// Same measurement model, no process noise.
    pub fn without_process_noise(&self) -> Self {
        Self { sigma_x: 0.0, sigma_y: 0.0, sigma_theta: 0.0, sigma_v: 0.0, ..*self }
    }

    pub fn is_valid(&self) -> bool {
        [
            self.sigma_x,
            self.sigma_y,
            self.sigma_theta,
            self.sigma_v,
            self.sigma_zx,
            self.sigma_zy,
            self.sigma_ztheta,
            self.sigma_zv,
        ]
        .iter()
        .all(|s| *s >= 0.0 && s.is_finite())
    }
}

/// Noisy observation of one agent's kinematic state.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Measurement {
    pub agent: AgentId,
    pub timestamp: f64,
    pub z: KinematicState,
}

/// Deterministic part of the transition. The heading is advanced first and
/// the displacement uses the new heading; braking is limited so the speed
/// stops at zero instead of reversing.
pub fn step_mean(state: &KinematicState, action: &Action, dt: f64) -> KinematicState {
    let accel = action.accel.max(-state.v / dt);
    let theta = state.theta + action.yaw_rate * dt;
    let ds = state.v * dt + 0.5 * accel * dt * dt;
    KinematicState {
        x: state.x + ds * math::cos(theta),
        y: state.y + ds * math::sin(theta),
        theta: math::wrap_angle(theta),
        v: (state.v + accel * dt).max(0.0),
    }
}

/// Samples the next kinematic state: mean transition plus additive Gaussian
/// process noise, with the speed clamped at zero.
pub fn step<R: Rng + ?Sized>(
    state: &KinematicState,
    action: &Action,
    dt: f64,
    noise: &NoiseConfig,
    rng: &mut R,
) -> KinematicState {
    let mean = step_mean(state, action, dt);
    KinematicState {
        x: math::sample_normal(rng, mean.x, noise.sigma_x),
        y: math::sample_normal(rng, mean.y, noise.sigma_y),
        theta: math::wrap_angle(math::sample_normal(rng, mean.theta, noise.sigma_theta)),
        v: math::sample_normal(rng, mean.v, noise.sigma_v).max(0.0),
    }
}

/// Log-density of a measurement given the true state: four independent
/// Gaussians, heading residual wrapped.
pub fn measurement_logpdf(state: &KinematicState, z: &KinematicState, noise: &NoiseConfig) -> f64 {
    math::normal_logpdf(z.x - state.x, noise.sigma_zx)
        + math::normal_logpdf(z.y - state.y, noise.sigma_zy)
        + math::normal_logpdf(math::wrap_angle(z.theta - state.theta), noise.sigma_ztheta)
        + math::normal_logpdf(z.v - state.v, noise.sigma_zv)
}

/// Below this yaw rate the CTRV rollout degenerates to constant velocity.
pub const CTRV_STRAIGHT_THRESHOLD: f64 = 1e-6;

/// Closed-form CTRV rollout; returns `steps` future states.
pub fn ctrv_predict(state: &KinematicState, yaw_rate: f64, dt: f64, steps: usize) -> Vec<KinematicState> {
    let mut out = Vec::with_capacity(steps);
    let mut s = *state;
    for _ in 0..steps {
        s = if yaw_rate.abs() < CTRV_STRAIGHT_THRESHOLD {
            KinematicState {
                x: s.x + s.v * dt * math::cos(s.theta),
                y: s.y + s.v * dt * math::sin(s.theta),
                ..s
            }
        } else {
            let theta = s.theta + yaw_rate * dt;
            let r = s.v / yaw_rate;
            KinematicState {
                x: s.x + r * (math::sin(theta) - math::sin(s.theta)),
                y: s.y + r * (math::cos(s.theta) - math::cos(theta)),
                theta: math::wrap_angle(theta),
                v: s.v,
            }
        };
        out.push(s);
    }
    out
}

/// Yaw-rate estimate from consecutive heading measurements, smoothed by an
/// exponential moving average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YawRateTracker {
    alpha: f64,
    last: Option<(f64, f64)>,
    rate: Option<f64>,
}

impl YawRateTracker {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, last: None, rate: None }
    }

    /// Feeds a heading observed at `timestamp`; returns the updated estimate.
    pub fn observe(&mut self, timestamp: f64, theta: f64) -> f64 {
        if let Some((t0, th0)) = self.last {
            let dt = timestamp - t0;
            if dt > 0.0 {
                let raw = math::wrap_angle(theta - th0) / dt;
                self.rate = Some(match self.rate {
                    Some(prev) => self.alpha * raw + (1.0 - self.alpha) * prev,
                    None => raw,
                });
            }
        }
        self.last = Some((timestamp, theta));
        self.rate()
    }

    pub fn rate(&self) -> f64 {
        self.rate.unwrap_or(0.0)
    }
}

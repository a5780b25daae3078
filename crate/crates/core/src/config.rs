//! Run parameters.

use crate::behavior::{ActionSamplerParams, IdmParams};
use crate::kinematics::NoiseConfig;

/// Which influences of the action model are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InteractionMode {
    /// Preceding agents and conflicts with passing-order hypotheses.
    #[default]
    Interactive,
    /// Preceding agents and conflicts, but every yielding agent is assumed
    /// to let the other pass first.
    YieldOnly,
    /// Map features only; other agents are ignored.
    MapBased,
}

impl InteractionMode {
    pub fn uses_others(self) -> bool {
        !matches!(self, InteractionMode::MapBased)
    }

    pub fn branches_maneuvers(self) -> bool {
        matches!(self, InteractionMode::Interactive)
    }
}

/// Parameters of the per-agent action model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ModelParams {
    pub dt: f64,
    pub idm: IdmParams,
    pub sampler: ActionSamplerParams,
    /// Bumper-to-bumper length assumed for every agent (m).
    pub vehicle_length: f64,
    pub interaction: InteractionMode,
    /// Prune kinematically implausible passing orders.
    pub prune_maneuvers: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            dt: 0.2,
            idm: IdmParams::default(),
            sampler: ActionSamplerParams::default(),
            vehicle_length: 4.5,
            interaction: InteractionMode::Interactive,
            prune_maneuvers: true,
        }
    }
}

/// Noise of the simulated sensor, also used to place rejuvenated particles.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SensorNoise {
    pub sigma_xy: f64,
    pub sigma_theta: f64,
    pub sigma_v: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        Self { sigma_xy: 1.0, sigma_theta: 0.03, sigma_v: 1.0 }
    }
}

impl SensorNoise {
    pub fn zero() -> Self {
        Self { sigma_xy: 0.0, sigma_theta: 0.0, sigma_v: 0.0 }
    }
}

/// Everything needed to run the filter and the forecast.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RunConfig {
    pub particles: usize,
    /// Route horizon `l_H` (m).
    pub route_horizon: f64,
    pub model: ModelParams,
    pub noise: NoiseConfig,
    pub rejuvenation: f64,
    pub rejuvenation_noise: SensorNoise,
    /// Forecast horizon `T` (s).
    pub horizon: f64,
    pub hypothesis_floor: f64,
    /// Per-axis kernel width of the prediction likelihood (m).
    pub sigma_eval: f64,
    /// Smoothing factor of the CTRV yaw-rate estimate.
    pub yaw_rate_smoothing: f64,
    /// Frames an agent may be missing before it is dropped from the belief.
    pub departure_frames: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            particles: 1000,
            route_horizon: 30.0,
            model: ModelParams::default(),
            noise: NoiseConfig::default(),
            rejuvenation: 0.001,
            rejuvenation_noise: SensorNoise::default(),
            horizon: 5.0,
            hypothesis_floor: 1e-3,
            sigma_eval: 1.0,
            yaw_rate_smoothing: 0.5,
            departure_frames: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(&'static str),
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        let checks: [(bool, &'static str); 12] = [
            (m.dt > 0.0 && m.dt.is_finite(), "dt must be positive"),
            (self.particles > 0, "particle count must be positive"),
            (self.route_horizon > 0.0, "route horizon must be positive"),
            (m.idm.is_valid(), "IDM parameters out of range"),
            (m.sampler.is_valid(), "action sampler parameters out of range"),
            (m.vehicle_length > 0.0, "vehicle length must be positive"),
            (self.noise.is_valid(), "noise parameters must be non-negative"),
            (
                self.noise.sigma_zx > 0.0
                    && self.noise.sigma_zy > 0.0
                    && self.noise.sigma_ztheta > 0.0
                    && self.noise.sigma_zv > 0.0,
                "measurement noise must be positive",
            ),
            ((0.0..=1.0).contains(&self.rejuvenation), "rejuvenation probability must lie in [0, 1]"),
            (self.horizon >= 0.0, "forecast horizon must be non-negative"),
            ((0.0..1.0).contains(&self.hypothesis_floor), "hypothesis floor must lie in [0, 1)"),
            (self.sigma_eval > 0.0, "likelihood kernel width must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(ConfigError::Invalid(msg));
            }
        }
        Ok(())
    }

    /// Number of forecast steps covering the horizon.
    pub fn horizon_steps(&self) -> usize {
        libm::round(self.horizon / self.model.dt) as usize
    }
}

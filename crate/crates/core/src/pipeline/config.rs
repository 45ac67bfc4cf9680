use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::degeneracy::SensingOptions;
use crate::error::{Error, Result};
use crate::registration::SolverOptions;
use crate::scenesim::{ImuSpec, SceneSpec, SensorSpec, TrajectorySpec};

/// Everything a run depends on. Read from TOML; the run is a pure function
/// of this value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdometryConfig {
    #[serde(default)]
    pub seed: u64,
    /// Use the IMU: seed registration with the inertial prediction and blend
    /// flagged channels. Off means pure LiDAR odometry.
    #[serde(default = "default_true")]
    pub fusion: bool,
    /// Scan rate in Hz; also the ground-truth sample rate.
    #[serde(default = "default_lidar_rate")]
    pub lidar_rate: f64,
    /// Share of the LiDAR-derived velocity mixed into the inertial velocity
    /// state after each frame.
    #[serde(default = "default_velocity_gain")]
    pub velocity_gain: f64,
    pub scene: SceneSpec,
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub sensor: SensorSpec,
    #[serde(default = "default_imu")]
    pub imu: ImuSpec,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub sensing: SensingOptions,
}

fn default_true() -> bool {
    true
}
fn default_lidar_rate() -> f64 {
    10.0
}
fn default_velocity_gain() -> f64 {
    0.02
}
fn default_imu() -> ImuSpec {
    ImuSpec::noiseless(100.0)
}

impl OdometryConfig {
    pub fn new(scene: SceneSpec, trajectory: TrajectorySpec) -> Self {
        Self {
            seed: 0,
            fusion: true,
            lidar_rate: default_lidar_rate(),
            velocity_gain: default_velocity_gain(),
            scene,
            trajectory,
            sensor: SensorSpec::default(),
            imu: default_imu(),
            solver: SolverOptions::default(),
            sensing: SensingOptions::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config values are plain data")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lidar_rate > 0.0 && self.lidar_rate.is_finite()) {
            return Err(Error::param("lidar_rate must be positive"));
        }
        if !(0.0..=1.0).contains(&self.velocity_gain) {
            return Err(Error::param("velocity_gain must lie in [0, 1]"));
        }
        if !(self.imu.rate > 0.0) {
            return Err(Error::param("imu.rate must be positive"));
        }
        let ratio = self.imu.rate / self.lidar_rate;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(Error::param("imu.rate must be an integer multiple of lidar_rate"));
        }
        if !(self.imu.gyro_noise >= 0.0 && self.imu.accel_noise >= 0.0) {
            return Err(Error::param("imu noise levels must be non-negative"));
        }
        self.sensor.validate()?;
        self.solver.validate()?;
        self.sensing.validate()?;
        Ok(())
    }
}

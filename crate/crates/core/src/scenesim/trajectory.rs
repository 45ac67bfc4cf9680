use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Quaternion, Vec3};
use crate::scenesim::scene::Scene;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub timestamp: f64,
    pub pose: Pose,
}

/// Ground-truth trajectory with strictly increasing timestamps.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrajectoryGT {
    samples: Vec<TrajectorySample>,
}

impl TrajectoryGT {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self> {
        if samples
            .windows(2)
            .any(|w| !(w[1].timestamp > w[0].timestamp))
        {
            return Err(Error::param("trajectory timestamps must be strictly increasing"));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean sample rate in Hz.
    pub fn rate(&self) -> Option<f64> {
        let n = self.samples.len();
        (n >= 2).then(|| (n - 1) as f64 / (self.samples[n - 1].timestamp - self.samples[0].timestamp))
    }

    /// Every `step`-th sample, starting with the first.
    pub fn decimate(&self, step: usize) -> Self {
        Self {
            samples: self.samples.iter().step_by(step.max(1)).copied().collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrajectoryKind {
    Straight,
    /// Constant yaw rate; `turn_deg` of heading change over the whole duration.
    Curve { turn_deg: f64 },
    /// Closed rectangle of `side_x` by `side_y` meters, traversed counter-clockwise.
    Loop { side_x: f64, side_y: f64 },
}

/// Trajectory description. `start` is the initial sensor position, `heading_deg`
/// its initial yaw. `sway` adds a seeded, smooth lateral/vertical oscillation
/// of that amplitude (meters) as a hand-held sensor would see.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectorySpec", into = "RawTrajectorySpec")]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    pub start: [f64; 3],
    pub heading_deg: f64,
    pub speed: f64,
    pub duration: f64,
    pub sway: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    Straight,
    Curve,
    Loop,
}

// Flat on-disk form, so unknown keys are rejected for every kind.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrajectorySpec {
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    turn_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    side_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    side_y: Option<f64>,
    start: [f64; 3],
    #[serde(default)]
    heading_deg: f64,
    speed: f64,
    #[serde(default)]
    duration: f64,
    #[serde(default)]
    sway: f64,
}

impl TryFrom<RawTrajectorySpec> for TrajectorySpec {
    type Error = String;

    fn try_from(r: RawTrajectorySpec) -> std::result::Result<Self, String> {
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| format!("trajectory.{key} is required for this kind"));
        let kind = match r.kind {
            KindTag::Straight => TrajectoryKind::Straight,
            KindTag::Curve => TrajectoryKind::Curve {
                turn_deg: need(r.turn_deg, "turn_deg")?,
            },
            KindTag::Loop => TrajectoryKind::Loop {
                side_x: need(r.side_x, "side_x")?,
                side_y: need(r.side_y, "side_y")?,
            },
        };
        let stray = match kind {
            TrajectoryKind::Straight => [("turn_deg", r.turn_deg), ("side_x", r.side_x), ("side_y", r.side_y)].to_vec(),
            TrajectoryKind::Curve { .. } => [("side_x", r.side_x), ("side_y", r.side_y)].to_vec(),
            TrajectoryKind::Loop { .. } => [("turn_deg", r.turn_deg)].to_vec(),
        };
        if let Some((key, _)) = stray.iter().find(|(_, v)| v.is_some()) {
            return Err(format!("trajectory.{key} does not apply to this kind"));
        }
        Ok(Self {
            kind,
            start: r.start,
            heading_deg: r.heading_deg,
            speed: r.speed,
            duration: r.duration,
            sway: r.sway,
        })
    }
}

impl From<TrajectorySpec> for RawTrajectorySpec {
    fn from(s: TrajectorySpec) -> Self {
        let (kind, turn_deg, side_x, side_y) = match s.kind {
            TrajectoryKind::Straight => (KindTag::Straight, None, None, None),
            TrajectoryKind::Curve { turn_deg } => (KindTag::Curve, Some(turn_deg), None, None),
            TrajectoryKind::Loop { side_x, side_y } => (KindTag::Loop, None, Some(side_x), Some(side_y)),
        };
        Self {
            kind,
            turn_deg,
            side_x,
            side_y,
            start: s.start,
            heading_deg: s.heading_deg,
            speed: s.speed,
            duration: s.duration,
            sway: s.sway,
        }
    }
}

impl TrajectorySpec {
    pub fn straight(start: [f64; 3], speed: f64, duration: f64) -> Self {
        Self {
            kind: TrajectoryKind::Straight,
            start,
            heading_deg: 0.0,
            speed,
            duration,
            sway: 0.0,
        }
    }
}

struct Sway {
    amp: f64,
    freq: [f64; 2],
    phase: [f64; 2],
}

impl Sway {
    fn new(amp: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            amp,
            freq: [rng.random_range(0.2..0.5), rng.random_range(0.3..0.7)],
            phase: [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)],
        }
    }

    /// Offset in the heading frame: (lateral, vertical).
    fn offset(&self, t: f64) -> (f64, f64) {
        if self.amp == 0.0 {
            return (0.0, 0.0);
        }
        (
            self.amp * ((TAU * self.freq[0] * t + self.phase[0]).sin() - self.phase[0].sin()),
            0.5 * self.amp * ((TAU * self.freq[1] * t + self.phase[1]).sin() - self.phase[1].sin()),
        )
    }
}

/// Samples a trajectory at `rate` Hz. Deterministic given `seed`; the seed only
/// matters when `sway > 0`.
pub fn generate_trajectory(spec: &TrajectorySpec, scene: &Scene, rate: f64, seed: u64) -> Result<TrajectoryGT> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::param("trajectory rate must be positive"));
    }
    if !(spec.speed >= 0.0 && spec.speed.is_finite()) {
        return Err(Error::param("trajectory.speed must be non-negative"));
    }
    if !(spec.sway >= 0.0) {
        return Err(Error::param("trajectory.sway must be non-negative"));
    }
    let start = Vec3::from(spec.start);
    let heading0 = spec.heading_deg.to_radians();
    let sway = Sway::new(spec.sway, seed);

    let samples: Vec<TrajectorySample> = match spec.kind {
        TrajectoryKind::Straight | TrajectoryKind::Curve { .. } => {
            if !(spec.duration > 0.0) {
                return Err(Error::param("trajectory.duration must be positive"));
            }
            let n = (spec.duration * rate).round() as usize;
            let omega = match spec.kind {
                TrajectoryKind::Curve { turn_deg } => turn_deg.to_radians() / spec.duration,
                _ => 0.0,
            };
            (0..=n)
                .map(|i| {
                    let t = i as f64 / rate;
                    let (p, yaw) = arc_point(&start, heading0, spec.speed, omega, t);
                    let (lat, vert) = sway.offset(t);
                    let left = Vec3::new(-yaw.sin(), yaw.cos(), 0.0);
                    TrajectorySample {
                        timestamp: t,
                        pose: Pose::new(
                            Quaternion::from_yaw(yaw),
                            p + left * lat + Vec3::z() * vert,
                        ),
                    }
                })
                .collect()
        }
        TrajectoryKind::Loop { side_x, side_y } => {
            if !(side_x > 0.0 && side_y > 0.0) {
                return Err(Error::param("trajectory loop sides must be positive"));
            }
            if !(spec.speed > 0.0) {
                return Err(Error::param("trajectory.speed must be positive for loops"));
            }
            let perimeter = 2.0 * (side_x + side_y);
            let n = ((perimeter / spec.speed) * rate).round().max(4.0) as usize;
            (0..=n)
                .map(|i| {
                    let s = perimeter * i as f64 / n as f64;
                    let (p, yaw) = if i == n {
                        (start, heading0)
                    } else {
                        rectangle_point(&start, heading0, side_x, side_y, s)
                    };
                    TrajectorySample {
                        timestamp: i as f64 / rate,
                        pose: Pose::new(Quaternion::from_yaw(yaw), p),
                    }
                })
                .collect()
        }
    };

    if let Some(bad) = samples.iter().find(|s| !scene.extent.contains(&s.pose.translation)) {
        return Err(Error::param(format!(
            "trajectory leaves the scene at t = {:.3} s (position {:?})",
            bad.timestamp,
            bad.pose.translation.as_slice()
        )));
    }
    TrajectoryGT::new(samples)
}

fn arc_point(start: &Vec3, yaw0: f64, speed: f64, omega: f64, t: f64) -> (Vec3, f64) {
    if omega == 0.0 {
        let d = Vec3::new(yaw0.cos(), yaw0.sin(), 0.0);
        return (start + d * (speed * t), yaw0);
    }
    let yaw = yaw0 + omega * t;
    let r = speed / omega;
    (
        start + Vec3::new(r * (yaw.sin() - yaw0.sin()), -r * (yaw.cos() - yaw0.cos()), 0.0),
        yaw,
    )
}

fn rectangle_point(start: &Vec3, yaw0: f64, sx: f64, sy: f64, s: f64) -> (Vec3, f64) {
    let legs = [sx, sy, sx, sy];
    let mut corner = *start;
    let mut rem = s;
    for (k, len) in legs.iter().enumerate() {
        let yaw = yaw0 + k as f64 * std::f64::consts::FRAC_PI_2;
        let dir = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
        if rem < *len || k == 3 {
            return (corner + dir * rem, yaw);
        }
        corner += dir * *len;
        rem -= len;
    }
    unreachable!()
}

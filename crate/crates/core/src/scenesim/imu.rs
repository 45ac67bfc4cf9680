use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Quaternion, Vec3};
use crate::scenesim::trajectory::{TrajectoryGT, TrajectorySample};

/// One IMU sample interval: body-frame angular rate and specific force held
/// constant over `dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImuIncrement {
    pub dt: f64,
    pub gyro: Vec3,
    pub accel: Vec3,
}

/// Noise terms are per-sample standard deviations; biases are constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImuSpec {
    pub rate: f64,
    #[serde(default)]
    pub gyro_noise: f64,
    #[serde(default)]
    pub accel_noise: f64,
    #[serde(default)]
    pub gyro_bias: [f64; 3],
    #[serde(default)]
    pub accel_bias: [f64; 3],
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

fn default_gravity() -> f64 {
    9.81
}

impl ImuSpec {
    pub fn noiseless(rate: f64) -> Self {
        Self {
            rate,
            gyro_noise: 0.0,
            accel_noise: 0.0,
            gyro_bias: [0.0; 3],
            accel_bias: [0.0; 3],
            gravity: default_gravity(),
        }
    }
}

fn gravity_vec(g: f64) -> Vec3 {
    Vec3::new(0.0, 0.0, -g)
}

/// Upsamples by an integer factor: cubic Hermite positions with
/// finite-difference tangents, slerped rotations.
fn upsample(samples: &[TrajectorySample], factor: usize) -> Vec<TrajectorySample> {
    if factor == 1 || samples.len() < 2 {
        return samples.to_vec();
    }
    let n = samples.len();
    let tangent = |i: usize| -> Vec3 {
        let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
        (samples[b].pose.translation - samples[a].pose.translation)
            / (samples[b].timestamp - samples[a].timestamp)
    };
    let mut out = Vec::with_capacity((n - 1) * factor + 1);
    for i in 0..n - 1 {
        let (s0, s1) = (&samples[i], &samples[i + 1]);
        let h = s1.timestamp - s0.timestamp;
        let (m0, m1) = (tangent(i) * h, tangent(i + 1) * h);
        for k in 0..factor {
            let u = k as f64 / factor as f64;
            let (u2, u3) = (u * u, u * u * u);
            let p = s0.pose.translation * (2.0 * u3 - 3.0 * u2 + 1.0)
                + m0 * (u3 - 2.0 * u2 + u)
                + s1.pose.translation * (-2.0 * u3 + 3.0 * u2)
                + m1 * (u3 - u2);
            out.push(TrajectorySample {
                timestamp: s0.timestamp + u * h,
                pose: Pose::new(s0.pose.rotation.slerp(&s1.pose.rotation, u), p),
            });
        }
    }
    out.push(samples[n - 1]);
    out
}

/// Synthesizes IMU increments from a ground-truth trajectory by finite
/// differencing. `spec.rate` must be an integer multiple of the trajectory
/// rate. Increment `i` spans samples `i` and `i + 1` of the (upsampled)
/// trajectory.
pub fn simulate_imu(traj: &TrajectoryGT, spec: &ImuSpec, seed: u64) -> Result<Vec<ImuIncrement>> {
    let Some(traj_rate) = traj.rate() else {
        return Ok(Vec::new());
    };
    let ratio = spec.rate / traj_rate;
    let factor = ratio.round();
    if !(factor >= 1.0) || (ratio - factor).abs() > 1e-6 * factor {
        return Err(Error::param(format!(
            "imu.rate ({}) must be an integer multiple of the trajectory rate ({traj_rate})",
            spec.rate
        )));
    }
    for (name, v) in [("gyro_noise", spec.gyro_noise), ("accel_noise", spec.accel_noise)] {
        if !(v >= 0.0) {
            return Err(Error::param(format!("imu.{name} must be non-negative")));
        }
    }
    let dense = upsample(traj.samples(), factor as usize);
    let n = dense.len();
    let dt_of = |i: usize| dense[i + 1].timestamp - dense[i].timestamp;

    let vel: Vec<Vec3> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (dense[b].pose.translation - dense[a].pose.translation)
                / (dense[b].timestamp - dense[a].timestamp)
        })
        .collect();

    let gyro_n = Normal::new(0.0, spec.gyro_noise).map_err(|e| Error::param(e.to_string()))?;
    let accel_n = Normal::new(0.0, spec.accel_noise).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise3 = |d: &Normal<f64>, sigma: f64| -> Vec3 {
        if sigma == 0.0 {
            Vec3::zeros()
        } else {
            Vec3::new(d.sample(&mut rng), d.sample(&mut rng), d.sample(&mut rng))
        }
    };
    let g = gravity_vec(spec.gravity);

    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n - 1 {
        let dt = dt_of(i);
        let r0 = dense[i].pose.rotation;
        let r1 = dense[i + 1].pose.rotation;
        let omega = r0.conjugate().mul(&r1).log() / dt;
        let r_mid = r0.mul(&Quaternion::exp(&(omega * (0.5 * dt))));
        let a = (vel[i + 1] - vel[i]) / dt;
        let f = r_mid.conjugate().rotate(&(a - g));
        let gyro = omega + Vec3::from(spec.gyro_bias) + noise3(&gyro_n, spec.gyro_noise);
        let accel = f + Vec3::from(spec.accel_bias) + noise3(&accel_n, spec.accel_noise);
        out.push(ImuIncrement { dt, gyro, accel });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeadReckoning {
    /// Motion over the span, expressed in the initial body frame.
    pub relative: Pose,
    pub end_pose: Pose,
    pub end_velocity: Vec3,
}

/// Integrates increments from `initial` (world pose and world velocity).
/// Rotation uses the exact exponential of each constant-rate interval; the
/// specific force is rotated with the interval's midpoint attitude.
pub fn dead_reckon(increments: &[ImuIncrement], initial: &Pose, velocity: &Vec3, gravity: f64) -> DeadReckoning {
    let g = gravity_vec(gravity);
    let mut rot = initial.rotation;
    let mut pos = initial.translation;
    let mut vel = *velocity;
    for inc in increments {
        let r_mid = rot.mul(&Quaternion::exp(&(inc.gyro * (0.5 * inc.dt))));
        let a = r_mid.rotate(&inc.accel) + g;
        pos += vel * inc.dt + a * (0.5 * inc.dt * inc.dt);
        vel += a * inc.dt;
        rot = rot.mul(&Quaternion::exp(&(inc.gyro * inc.dt)));
    }
    let end_pose = Pose::new(rot, pos);
    DeadReckoning {
        relative: initial.inverse().compose(&end_pose),
        end_pose,
        end_velocity: vel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenesim::scene::{build_scene, SceneSpec};
    use crate::scenesim::trajectory::{generate_trajectory, TrajectoryKind, TrajectorySpec};
    use std::f64::consts::FRAC_PI_2;

    fn open() -> crate::scenesim::scene::Scene {
        build_scene(&SceneSpec::OpenGround { size: 400.0 }).unwrap()
    }

    fn traj(spec: &TrajectorySpec, rate: f64) -> TrajectoryGT {
        generate_trajectory(spec, &open(), rate, 0).unwrap()
    }

    #[test]
    fn stationary_reads_gravity() {
        let t = traj(&TrajectorySpec::straight([0.0, 0.0, 1.0], 0.0, 1.0), 100.0);
        let inc = simulate_imu(&t, &ImuSpec::noiseless(100.0), 0).unwrap();
        assert_eq!(inc.len(), 100);
        for i in &inc {
            assert!(i.gyro.norm() < 1e-12);
            assert!((i.accel - Vec3::new(0.0, 0.0, 9.81)).norm() < 1e-9);
        }
    }

    #[test]
    fn constant_velocity_has_no_rotation_rate() {
        let t = traj(&TrajectorySpec::straight([0.0, 0.0, 1.0], 1.5, 2.0), 10.0);
        let inc = simulate_imu(&t, &ImuSpec::noiseless(100.0), 0).unwrap();
        assert_eq!(inc.len(), 200);
        assert!(inc.iter().all(|i| i.gyro.norm() < 1e-12));
        assert!(inc
            .iter()
            .all(|i| (i.accel - Vec3::new(0.0, 0.0, 9.81)).norm() < 1e-9));
    }

    #[test]
    fn constant_yaw_rate_gyro() {
        let spec = TrajectorySpec {
            kind: TrajectoryKind::Curve { turn_deg: 90.0 },
            ..TrajectorySpec::straight([0.0, 0.0, 1.0], 1.0, 10.0)
        };
        let t = traj(&spec, 10.0);
        let inc = simulate_imu(&t, &ImuSpec::noiseless(200.0), 0).unwrap();
        let omega = FRAC_PI_2 / 10.0;
        for i in &inc {
            assert!((i.gyro - Vec3::new(0.0, 0.0, omega)).norm() < 1e-6);
        }
    }

    #[test]
    fn rate_must_be_integer_multiple() {
        let t = traj(&TrajectorySpec::straight([0.0, 0.0, 1.0], 1.0, 1.0), 10.0);
        assert!(simulate_imu(&t, &ImuSpec::noiseless(25.0), 0).is_err());
        assert!(simulate_imu(&t, &ImuSpec::noiseless(5.0), 0).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let t = traj(&TrajectorySpec::straight([0.0, 0.0, 1.0], 1.0, 1.0), 100.0);
        let spec = ImuSpec {
            gyro_noise: 1e-3,
            accel_noise: 1e-2,
            ..ImuSpec::noiseless(100.0)
        };
        let a = simulate_imu(&t, &spec, 5).unwrap();
        assert_eq!(a, simulate_imu(&t, &spec, 5).unwrap());
        assert_ne!(a, simulate_imu(&t, &spec, 6).unwrap());
    }

    #[test]
    fn empty_span_is_identity() {
        let p = Pose::new(Quaternion::from_yaw(0.3), Vec3::new(1.0, 2.0, 3.0));
        let dr = dead_reckon(&[], &p, &Vec3::new(1.0, 0.0, 0.0), 9.81);
        let (ang, dist) = dr.relative.distance_to(&Pose::identity());
        assert!(ang < 1e-12 && dist < 1e-12);
    }

    #[test]
    fn straight_line_reckoning_matches_truth() {
        let spec = TrajectorySpec {
            heading_deg: 30.0,
            ..TrajectorySpec::straight([0.0, 0.0, 1.0], 2.0, 1.0)
        };
        let t = traj(&spec, 100.0);
        let inc = simulate_imu(&t, &ImuSpec::noiseless(100.0), 0).unwrap();
        let s = t.samples();
        let v0 = (s[1].pose.translation - s[0].pose.translation) / 0.01;
        let dr = dead_reckon(&inc[..10], &s[0].pose, &v0, 9.81);
        let truth = s[0].pose.inverse().compose(&s[10].pose);
        let (ang, dist) = dr.relative.distance_to(&truth);
        assert!(dist < 1e-4 && ang < 1e-9);
    }

    #[test]
    fn gyro_only_quarter_turn() {
        // ω = (π/2)/1s held for 100 steps of 10 ms: closed form Exp(ω·T).
        let omega = FRAC_PI_2;
        let inc: Vec<ImuIncrement> = (0..100)
            .map(|_| ImuIncrement {
                dt: 0.01,
                gyro: Vec3::new(0.0, 0.0, omega),
                accel: Vec3::zeros(),
            })
            .collect();
        let dr = dead_reckon(&inc, &Pose::identity(), &Vec3::zeros(), 0.0);
        assert!(dr.relative.rotation.angle_to(&Quaternion::from_yaw(FRAC_PI_2)) < 1e-4);
        assert!(dr.relative.translation.norm() < 1e-12);
    }

    #[test]
    fn curve_reckoning_tracks_truth() {
        let spec = TrajectorySpec {
            kind: TrajectoryKind::Curve { turn_deg: 90.0 },
            ..TrajectorySpec::straight([0.0, 0.0, 1.0], 1.0, 10.0)
        };
        let t = traj(&spec, 10.0);
        let inc = simulate_imu(&t, &ImuSpec::noiseless(100.0), 0).unwrap();
        // start mid-trajectory with the analytic velocity
        let k = 50;
        let s = &t.samples()[k / 10];
        let yaw = s.pose.rotation.yaw();
        let v0 = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
        let dr = dead_reckon(&inc[k..k + 10], &s.pose, &v0, 9.81);
        let truth = s.pose.inverse().compose(&t.samples()[k / 10 + 1].pose);
        let (ang, dist) = dr.relative.distance_to(&truth);
        assert!(dist < 1e-4, "{dist}");
        assert!(ang < 1e-6, "{ang}");
    }
}

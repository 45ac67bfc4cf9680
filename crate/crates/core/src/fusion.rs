//! Degeneracy-weighted blending of the LiDAR pose with an IMU prediction.

use crate::degeneracy::{DegeneracyFactor, SensingResult};
use crate::error::{Error, Result};
use crate::geometry::{compose, Pose, Quaternion, Vec3};

/// Rigid transform from the IMU body frame to the LiDAR frame.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Extrinsics {
    pub pose_imu_to_lidar: Pose,
}

impl Extrinsics {
    pub fn identity() -> Self {
        Self::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct CompensatedChannels {
    pub rotation: bool,
    pub translation: bool,
}

impl CompensatedChannels {
    pub fn is_empty(&self) -> bool {
        !self.rotation && !self.translation
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusedPose {
    pub pose: Pose,
    /// IMU share `1 − 1/S` of each channel; 0 when not compensated.
    pub rot_weight_imu: f64,
    pub trans_weight_imu: f64,
    pub channels: CompensatedChannels,
}

/// `R = R_bL R_b`, `t = R_bL t_b + t_bL`.
pub fn project_imu_pose(imu_pose: &Pose, ext: &Extrinsics) -> Pose {
    compose(&ext.pose_imu_to_lidar, imu_pose)
}

fn check_factor(s: f64, name: &str) -> Result<()> {
    if !(s >= 1.0) {
        return Err(Error::param(format!("{name} must be at least 1, got {s}")));
    }
    Ok(())
}

/// `(1 − 1/S)·t_imu + (1/S)·t_lidar`.
pub fn fuse_translation(t_imu: &Vec3, t_lidar: &Vec3, s_trans: f64) -> Result<Vec3> {
    check_factor(s_trans, "s_trans")?;
    if s_trans == 1.0 {
        return Ok(*t_lidar);
    }
    let v = 1.0 / s_trans;
    Ok(t_imu * (1.0 - v) + t_lidar * v)
}

/// Componentwise `(1 − 1/S)·q_imu + (1/S)·q_lidar` after bringing both
/// quaternions into the same hemisphere, renormalized.
pub fn fuse_rotation(q_imu: &Quaternion, q_lidar: &Quaternion, s_rot: f64) -> Result<Quaternion> {
    check_factor(s_rot, "s_rot")?;
    if s_rot == 1.0 {
        return Ok(*q_lidar);
    }
    let v = 1.0 / s_rot;
    let w = 1.0 - v;
    let sign = if q_imu.dot(q_lidar) < 0.0 { -1.0 } else { 1.0 };
    let a = q_imu.coords();
    let b = q_lidar.coords();
    let c: [f64; 4] = std::array::from_fn(|k| w * a[k] + v * sign * b[k]);
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm >= 1e-9) {
        return Err(Error::DegenerateBlend { norm });
    }
    Ok(Quaternion::new(c[0], c[1], c[2], c[3]))
}

/// Chains the projected IMU motion onto the previous pose and blends each
/// flagged channel with the LiDAR estimate; unflagged channels pass through.
pub fn compensate(
    lidar: &Pose,
    imu_relative: &Pose,
    prev_pose: &Pose,
    ext: &Extrinsics,
    sensing: &SensingResult,
    factors: &DegeneracyFactor,
) -> Result<FusedPose> {
    let predicted = compose(prev_pose, &project_imu_pose(imu_relative, ext));
    let mut out = FusedPose {
        pose: *lidar,
        rot_weight_imu: 0.0,
        trans_weight_imu: 0.0,
        channels: CompensatedChannels::default(),
    };
    if sensing.trans_degenerate {
        out.pose.translation = fuse_translation(&predicted.translation, &lidar.translation, factors.s_trans)?;
        out.trans_weight_imu = 1.0 - 1.0 / factors.s_trans;
        out.channels.translation = true;
    }
    if sensing.rot_degenerate {
        out.pose.rotation = fuse_rotation(&predicted.rotation, &lidar.rotation, factors.s_rot)?;
        out.rot_weight_imu = 1.0 - 1.0 / factors.s_rot;
        out.channels.rotation = true;
    }
    Ok(out)
}

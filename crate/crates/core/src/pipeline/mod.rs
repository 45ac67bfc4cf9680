//! End-to-end odometry: simulate, register, sense, compensate, record.

mod config;
mod metrics;
mod trace;
mod tum;

pub use config::OdometryConfig;
pub use metrics::{aligned_errors, trajectory_metrics, TrajectoryMetrics, TIMESTAMP_TOLERANCE};
pub use trace::{
    export_trace, import_trace, read_trace, replay_detect, replay_from_reader, write_flags, write_trace,
    TraceRecord, TRACE_COLUMNS, TRACE_VERSION_LINE,
};
pub use tum::{load_tum, read_tum, save_tum, write_tum};

use crate::degeneracy::{degeneracy_factors, DegeneracySensor, DEFAULT_RELATIVE_FLOOR};
use crate::error::{Error, Result};
use crate::fusion::{compensate, Extrinsics};
use crate::geometry::{Pose, Vec3};
use crate::registration::{gauss_newton_solve, residual_rmse};
use crate::scenesim::{
    build_scene, dead_reckon, generate_trajectory, simulate_imu, simulate_scan, Scene, TrajectoryGT,
    TrajectorySample,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub timestamp: f64,
    /// Registration result alone.
    pub pose_lo: Pose,
    pub pose_fused: Pose,
    pub s_rot: f64,
    pub s_trans: f64,
    pub rot_flag: bool,
    pub trans_flag: bool,
    /// RMSE of the frame's final correspondences at `pose_lo` and at
    /// `pose_fused`.
    pub residual_rmse_before: f64,
    pub residual_rmse_after: f64,
    /// The scan produced no correspondences; the pose is the motion
    /// prediction and both flags are raised.
    pub registration_failed: bool,
}

impl FrameRecord {
    pub fn to_trace(&self) -> TraceRecord {
        TraceRecord {
            frame: self.frame_index,
            timestamp: self.timestamp,
            s_rot: self.s_rot,
            s_trans: self.s_trans,
            rot_flag: self.rot_flag,
            trans_flag: self.trans_flag,
            rmse_before: self.residual_rmse_before,
            rmse_after: self.residual_rmse_after,
            pose: self.pose_fused,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdometryRun {
    pub records: Vec<FrameRecord>,
    pub ground_truth: TrajectoryGT,
}

impl OdometryRun {
    pub fn lo_trajectory(&self) -> Vec<TrajectorySample> {
        self.records
            .iter()
            .map(|r| TrajectorySample {
                timestamp: r.timestamp,
                pose: r.pose_lo,
            })
            .collect()
    }

    pub fn fused_trajectory(&self) -> Vec<TrajectorySample> {
        self.records
            .iter()
            .map(|r| TrajectorySample {
                timestamp: r.timestamp,
                pose: r.pose_fused,
            })
            .collect()
    }

    pub fn trace(&self) -> Vec<TraceRecord> {
        self.records.iter().map(FrameRecord::to_trace).collect()
    }

    pub fn flagged(&self) -> impl Iterator<Item = &FrameRecord> {
        self.records.iter().filter(|r| r.rot_flag || r.trans_flag)
    }
}

const STREAM_TRAJECTORY: u64 = 1;
const STREAM_IMU: u64 = 2;
const STREAM_SCAN: u64 = 3;

/// Independent, reproducible seed per random stream (splitmix64 finalizer).
fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs the full pipeline. The first frame starts from the ground-truth pose
/// and velocity; every later frame is registered from the previous fused
/// pose, propagated by the IMU when fusion is on.
pub fn run_odometry(cfg: &OdometryConfig) -> Result<OdometryRun> {
    cfg.validate()?;
    let scene = build_scene(&cfg.scene)?;
    let gt = generate_trajectory(&cfg.trajectory, &scene, cfg.lidar_rate, derive_seed(cfg.seed, STREAM_TRAJECTORY, 0))?;
    run_on(cfg, &scene, gt)
}

fn run_on(cfg: &OdometryConfig, scene: &Scene, gt: TrajectoryGT) -> Result<OdometryRun> {
    let samples = gt.samples();
    if samples.len() < 2 {
        return Err(Error::param("trajectory must contain at least two frames"));
    }
    let per_frame = (cfg.imu.rate / cfg.lidar_rate).round() as usize;
    let imu = if cfg.fusion {
        simulate_imu(&gt, &cfg.imu, derive_seed(cfg.seed, STREAM_IMU, 0))?
    } else {
        Vec::new()
    };
    let dt = 1.0 / cfg.lidar_rate;
    let ext = Extrinsics::identity();
    let mut sensor = DegeneracySensor::new(cfg.sensing)?;

    let mut prev = samples[0].pose;
    let mut velocity: Vec3 = (samples[1].pose.translation - samples[0].pose.translation) / dt;
    let mut records = Vec::with_capacity(samples.len());

    for (i, sample) in samples.iter().enumerate() {
        let scan = simulate_scan(
            scene,
            &sample.pose,
            &cfg.sensor,
            sample.timestamp,
            derive_seed(cfg.seed, STREAM_SCAN, i as u64),
        )?;
        let prediction = (cfg.fusion && i > 0)
            .then(|| dead_reckon(&imu[(i - 1) * per_frame..i * per_frame], &prev, &velocity, cfg.imu.gravity));
        let init = prediction.map_or(prev, |p| p.end_pose);

        let record = match gauss_newton_solve(&scan, scene, &init, &cfg.solver) {
            Ok(reg) => {
                let factors = degeneracy_factors(&reg.blocks, DEFAULT_RELATIVE_FLOOR)?.at(i as u64, sample.timestamp);
                let sensing = sensor.sense(&factors);
                let fused = match &prediction {
                    Some(p) => compensate(&reg.pose, &p.relative, &prev, &ext, &sensing, &factors)?.pose,
                    None => reg.pose,
                };
                FrameRecord {
                    frame_index: i as u64,
                    timestamp: sample.timestamp,
                    pose_lo: reg.pose,
                    pose_fused: fused,
                    s_rot: factors.s_rot,
                    s_trans: factors.s_trans,
                    rot_flag: sensing.rot_degenerate,
                    trans_flag: sensing.trans_degenerate,
                    residual_rmse_before: reg.residual_rmse,
                    residual_rmse_after: residual_rmse(&fused, &reg.correspondences),
                    registration_failed: false,
                }
            }
            Err(Error::NoConstraints) => FrameRecord {
                frame_index: i as u64,
                timestamp: sample.timestamp,
                pose_lo: init,
                pose_fused: init,
                s_rot: 1.0,
                s_trans: 1.0,
                rot_flag: true,
                trans_flag: true,
                residual_rmse_before: f64::NAN,
                residual_rmse_after: f64::NAN,
                registration_failed: true,
            },
            Err(e) => return Err(e),
        };

        if let Some(p) = &prediction {
            let measured = (record.pose_fused.translation - prev.translation) / dt;
            velocity = if record.registration_failed {
                p.end_velocity
            } else {
                p.end_velocity + (measured - p.end_velocity) * cfg.velocity_gain
            };
        }
        prev = record.pose_fused;
        records.push(record);
    }

    Ok(OdometryRun {
        records,
        ground_truth: gt,
    })
}

//! Synthetic scenes, trajectories, labeled LiDAR scans and IMU streams.
//!
//! Every generator is a pure function of its inputs and seed.

pub mod imu;
pub mod scan;
pub mod scene;
pub mod trajectory;

pub use imu::{dead_reckon, simulate_imu, DeadReckoning, ImuIncrement, ImuSpec};
pub use scan::{simulate_scan, Scan, ScanPoint, SensorSpec};
pub use scene::{
    build_scene, Aabb, EdgeFeature, PlaneFeature, Scene, SceneSpec, SurfaceId, SurfaceKind,
};
pub use trajectory::{
    generate_trajectory, TrajectoryGT, TrajectoryKind, TrajectorySample, TrajectorySpec,
};

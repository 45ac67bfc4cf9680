//! Degeneracy-aware LiDAR/IMU odometry on simulated scenes.
//!
//! A scan-to-map Gauss-Newton registration produces per-frame normal
//! matrices. Their rotation and translation blocks are reduced to scalar
//! degeneracy factors, which an online density clusterer watches for
//! anomalies. Flagged frames are compensated by blending the LiDAR estimate
//! with an IMU prior.

pub mod cli;
pub mod degeneracy;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod pipeline;
pub mod registration;
pub mod scenesim;

pub use error::{Error, Result};
pub use geometry::{Pose, Quaternion, Vec3, Vec6};

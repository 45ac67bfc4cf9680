use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::scenesim::{TrajectoryGT, TrajectorySample};

/// Timestamps closer than this are the same instant.
pub const TIMESTAMP_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryMetrics {
    pub ate_rmse: f64,
    pub end_to_end_error: f64,
    pub max_error: f64,
}

fn lookup<'a>(gt: &'a [TrajectorySample], t: f64) -> Option<&'a TrajectorySample> {
    let i = gt.partition_point(|s| s.timestamp < t - TIMESTAMP_TOLERANCE);
    gt.get(i).filter(|s| (s.timestamp - t).abs() <= TIMESTAMP_TOLERANCE)
}

/// Per-frame translation errors after mapping the first estimated pose onto
/// the ground-truth pose at the same instant.
pub fn aligned_errors(est: &[TrajectorySample], gt: &TrajectoryGT) -> Result<Vec<f64>> {
    let first = est
        .first()
        .ok_or_else(|| Error::Alignment("estimated trajectory is empty".into()))?;
    let gts = gt.samples();
    let find = |s: &TrajectorySample| {
        lookup(gts, s.timestamp).ok_or_else(|| {
            Error::Alignment(format!("no ground-truth pose at t = {}", s.timestamp))
        })
    };
    let align = find(first)?.pose.compose(&first.pose.inverse());
    est.iter()
        .map(|s| {
            let g = find(s)?;
            let e: Pose = align.compose(&s.pose);
            Ok((e.translation - g.pose.translation).norm())
        })
        .collect()
}

pub fn trajectory_metrics(est: &[TrajectorySample], gt: &TrajectoryGT) -> Result<TrajectoryMetrics> {
    let errors = aligned_errors(est, gt)?;
    let n = errors.len() as f64;
    Ok(TrajectoryMetrics {
        ate_rmse: (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
        end_to_end_error: *errors.last().expect("non-empty"),
        max_error: errors.iter().copied().fold(0.0, f64::max),
    })
}

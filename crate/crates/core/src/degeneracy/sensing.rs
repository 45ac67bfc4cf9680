//! Online degeneracy sensing over a bounded window of factor values.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::degeneracy::dbscan::{dbscan, DbscanParams};
use crate::degeneracy::eps::{determine_eps_with, Point2};
use crate::degeneracy::DegeneracyFactor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensingOptions {
    /// Samples collected before any clustering happens.
    pub warmup: usize,
    /// Window capacity; older samples are evicted first.
    pub capacity: usize,
    pub min_pts: usize,
    pub eps_floor: f64,
    /// Knee threshold of the Eps search, in normalized units.
    pub eps_gap: f64,
}

impl Default for SensingOptions {
    fn default() -> Self {
        Self {
            warmup: 400,
            capacity: 1000,
            min_pts: 3,
            eps_floor: 1e-6,
            eps_gap: 0.1,
        }
    }
}

impl SensingOptions {
    pub fn validate(&self) -> Result<()> {
        if self.min_pts == 0 {
            return Err(Error::param("sensing.min_pts must be at least 1"));
        }
        if self.warmup >= self.capacity {
            return Err(Error::param("sensing.warmup must be smaller than sensing.capacity"));
        }
        if self.warmup < self.min_pts + 3 {
            return Err(Error::param(format!(
                "sensing.warmup must be at least min_pts + 3 = {}",
                self.min_pts + 3
            )));
        }
        if !(self.eps_floor > 0.0) {
            return Err(Error::param("sensing.eps_floor must be positive"));
        }
        if !(self.eps_gap >= 0.0) {
            return Err(Error::param("sensing.eps_gap must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Rotation,
    Translation,
}

/// Sliding window of `(frame_index, value)` samples for one channel plus the
/// largest value seen at a non-degenerate moment.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorWindow {
    channel: Channel,
    opts: SensingOptions,
    samples: VecDeque<(u64, f64)>,
    x_m: f64,
}

impl FactorWindow {
    pub fn new(channel: Channel, opts: SensingOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Self {
            channel,
            opts,
            samples: VecDeque::with_capacity(opts.capacity + 1),
            x_m: f64::NEG_INFINITY,
        })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn x_m(&self) -> f64 {
        self.x_m
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &(u64, f64)> {
        self.samples.iter()
    }

    /// Feeds one value; returns whether it marks a degenerate moment.
    /// Non-finite values are ignored and never flagged.
    pub fn sense(&mut self, frame_index: u64, value: f64) -> bool {
        if !value.is_finite() {
            return false;
        }
        if self.samples.len() < self.opts.warmup {
            self.samples.push_back((frame_index, value));
            self.x_m = self.x_m.max(value);
            return false;
        }
        self.samples.push_back((frame_index, value));
        while self.samples.len() > self.opts.capacity {
            self.samples.pop_front();
        }
        let points = self.normalized();
        let outlier = self.is_outlier(&points);
        if outlier && value > self.x_m {
            true
        } else {
            self.x_m = self.x_m.max(value);
            false
        }
    }

    /// Both axes min-max scaled to [0, 1] over the current window; a
    /// constant axis maps to 0.
    pub fn normalized(&self) -> Vec<Point2> {
        let (mut t0, mut t1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(i, v) in &self.samples {
            let t = i as f64;
            t0 = t0.min(t);
            t1 = t1.max(t);
            v0 = v0.min(v);
            v1 = v1.max(v);
        }
        let scale = |x: f64, lo: f64, hi: f64| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 };
        self.samples
            .iter()
            .map(|&(i, v)| [scale(i as f64, t0, t1), scale(v, v0, v1)])
            .collect()
    }

    fn is_outlier(&self, points: &[Point2]) -> bool {
        let eps = determine_eps_with(points, self.opts.min_pts, self.opts.eps_gap, self.opts.eps_floor)
            .expect("window holds more than min_pts + 3 samples after warm-up");
        let params = DbscanParams {
            eps,
            min_pts: self.opts.min_pts,
        };
        dbscan(points, &params).is_noise(points.len() - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensingResult {
    pub rot_degenerate: bool,
    pub trans_degenerate: bool,
    pub s_rot: f64,
    pub s_trans: f64,
}

impl SensingResult {
    pub fn any(&self) -> bool {
        self.rot_degenerate || self.trans_degenerate
    }
}

/// One window per channel, sensed independently.
#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracySensor {
    pub rotation: FactorWindow,
    pub translation: FactorWindow,
}

impl DegeneracySensor {
    pub fn new(opts: SensingOptions) -> Result<Self> {
        Ok(Self {
            rotation: FactorWindow::new(Channel::Rotation, opts)?,
            translation: FactorWindow::new(Channel::Translation, opts)?,
        })
    }

    pub fn sense(&mut self, factor: &DegeneracyFactor) -> SensingResult {
        SensingResult {
            rot_degenerate: self.rotation.sense(factor.frame_index, factor.s_rot),
            trans_degenerate: self.translation.sense(factor.frame_index, factor.s_trans),
            s_rot: factor.s_rot,
            s_trans: factor.s_trans,
        }
    }
}

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::scenesim::scene::{Scene, SurfaceId};

/// Azimuth/elevation grid LiDAR model. Azimuth is centered on the sensor's +x
/// axis; a 360° field of view emulates a spinning unit, a narrow one a
/// solid-state unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub azimuth_count: usize,
    pub elevation_count: usize,
    #[serde(default = "default_azimuth_fov")]
    pub azimuth_fov_deg: f64,
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
    pub max_range: f64,
    #[serde(default = "default_min_range")]
    pub min_range: f64,
    #[serde(default)]
    pub range_noise: f64,
    /// Rays passing this close to an edge feature return a point on the edge.
    #[serde(default = "default_edge_capture")]
    pub edge_capture_radius: f64,
}

fn default_azimuth_fov() -> f64 {
    360.0
}
fn default_min_range() -> f64 {
    0.1
}
fn default_edge_capture() -> f64 {
    0.03
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            azimuth_count: 180,
            elevation_count: 16,
            azimuth_fov_deg: 360.0,
            elevation_min_deg: -15.0,
            elevation_max_deg: 15.0,
            max_range: 30.0,
            min_range: default_min_range(),
            range_noise: 0.0,
            edge_capture_radius: default_edge_capture(),
        }
    }
}

impl SensorSpec {
    pub fn ray_count(&self) -> usize {
        self.azimuth_count * self.elevation_count
    }

    pub fn validate(&self) -> Result<()> {
        if self.ray_count() == 0 {
            return Err(Error::param("sensor ray counts must be positive"));
        }
        if !(self.max_range > self.min_range && self.min_range >= 0.0) {
            return Err(Error::param("sensor.max_range must exceed sensor.min_range >= 0"));
        }
        if !(self.range_noise >= 0.0) || !(self.edge_capture_radius >= 0.0) {
            return Err(Error::param("sensor noise and capture radius must be non-negative"));
        }
        if !(self.azimuth_fov_deg > 0.0 && self.azimuth_fov_deg <= 360.0) {
            return Err(Error::param("sensor.azimuth_fov_deg must lie in (0, 360]"));
        }
        if self.elevation_min_deg > self.elevation_max_deg
            || self.elevation_min_deg < -90.0
            || self.elevation_max_deg > 90.0
        {
            return Err(Error::param("sensor elevation span must lie within [-90, 90] degrees"));
        }
        Ok(())
    }

    /// Unit ray directions in the sensor frame, azimuth-major.
    pub fn ray_directions(&self) -> Vec<Vec3> {
        let fov = self.azimuth_fov_deg.to_radians();
        let (el0, el1) = (
            self.elevation_min_deg.to_radians(),
            self.elevation_max_deg.to_radians(),
        );
        let mut dirs = Vec::with_capacity(self.ray_count());
        for i in 0..self.azimuth_count {
            let az = -fov / 2.0 + fov * (i as f64 + 0.5) / self.azimuth_count as f64;
            for j in 0..self.elevation_count {
                let el = if self.elevation_count == 1 {
                    0.5 * (el0 + el1)
                } else {
                    el0 + (el1 - el0) * j as f64 / (self.elevation_count - 1) as f64
                };
                dirs.push(Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()));
            }
        }
        dirs
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanPoint {
    /// Sensor-frame position, meters.
    pub position: Vec3,
    pub label: SurfaceId,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Scan {
    pub timestamp: f64,
    pub points: Vec<ScanPoint>,
}

impl Scan {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes `x,y,z,label,kind` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "z", "label", "kind"])?;
        for p in &self.points {
            w.write_record([
                p.position.x.to_string(),
                p.position.y.to_string(),
                p.position.z.to_string(),
                p.label.index.to_string(),
                p.label.kind.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Closest hit along a world-frame ray.
fn cast(scene: &Scene, origin: &Vec3, dir: &Vec3, capture: f64) -> Option<(Vec3, SurfaceId)> {
    let mut best: Option<(f64, Vec3, SurfaceId)> = None;
    for (i, plane) in scene.planes.iter().enumerate() {
        if let Some(t) = plane.intersect(origin, dir) {
            if best.as_ref().is_none_or(|b| t < b.0) {
                best = Some((t, origin + dir * t, SurfaceId::plane(i)));
            }
        }
    }
    if capture > 0.0 {
        let plane_t = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        let mut best_edge: Option<(f64, Vec3, SurfaceId)> = None;
        for (i, edge) in scene.edges.iter().enumerate() {
            // closest approach between the ray and the edge segment
            let w0 = origin - edge.anchor;
            let b = dir.dot(&edge.direction);
            let denom = 1.0 - b * b;
            if denom < 1e-12 {
                continue;
            }
            let d = dir.dot(&w0);
            let e = edge.direction.dot(&w0);
            let s = ((e - b * d) / denom).clamp(-edge.half_length, edge.half_length);
            let on_edge = edge.anchor + edge.direction * s;
            let t = dir.dot(&(on_edge - origin));
            if t <= 0.0 || t > plane_t + capture {
                continue;
            }
            let miss = (origin + dir * t - on_edge).norm();
            if miss <= capture && best_edge.as_ref().is_none_or(|be| t < be.0) {
                best_edge = Some((t, on_edge, SurfaceId::edge(i)));
            }
        }
        if best_edge.is_some() {
            best = best_edge;
        }
    }
    best.map(|(_, p, id)| (p, id))
}

/// Casts the sensor's ray pattern from `pose` into `scene`. Returned points are
/// in the sensor frame; misses and out-of-range returns are dropped. Rays that
/// pass within the capture radius of an edge feature return the closest point
/// on that edge.
pub fn simulate_scan(scene: &Scene, pose: &Pose, sensor: &SensorSpec, timestamp: f64, seed: u64) -> Result<Scan> {
    sensor.validate()?;
    let noise = if sensor.range_noise > 0.0 {
        Some(Normal::new(0.0, sensor.range_noise).map_err(|e| Error::param(e.to_string()))?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = pose.translation;
    let inv = pose.rotation.conjugate();
    let mut points = Vec::new();
    for d in sensor.ray_directions() {
        let dir = pose.rotation.rotate(&d);
        let Some((hit, label)) = cast(scene, &origin, &dir, sensor.edge_capture_radius) else {
            continue;
        };
        let offset = hit - origin;
        let range = offset.norm();
        if range > sensor.max_range || range < sensor.min_range {
            continue;
        }
        let world = match &noise {
            Some(n) => origin + offset * ((range + n.sample(&mut rng)) / range),
            None => hit,
        };
        points.push(ScanPoint {
            position: inv.rotate(&(world - origin)),
            label,
        });
    }
    Ok(Scan { timestamp, points })
}

//! Eps selection from the k-distance graph.

use crate::error::{Error, Result};

pub type Point2 = [f64; 2];

pub(crate) fn distance(a: &Point2, b: &Point2) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// For every point, the `min_pts`-th smallest distance to all points
/// (1-indexed, the point's own zero distance included), sorted descending.
pub fn k_distance_list(points: &[Point2], min_pts: usize) -> Result<Vec<f64>> {
    if min_pts == 0 {
        return Err(Error::param("min_pts must be at least 1"));
    }
    if points.len() <= min_pts {
        return Err(Error::param(format!(
            "k-distance needs more than {min_pts} points, got {}",
            points.len()
        )));
    }
    let mut row = vec![0.0; points.len()];
    let mut out: Vec<f64> = points
        .iter()
        .map(|p| {
            for (d, q) in row.iter_mut().zip(points) {
                *d = distance(p, q);
            }
            *row.select_nth_unstable_by(min_pts - 1, f64::total_cmp).1
        })
        .collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Scans a descending k-distance list for the first entry whose drop to
/// each of the next three entries is at most `gap`. Falls back to the
/// median when no entry qualifies; the result is never below `floor`.
pub fn eps_from_k_distances(b: &[f64], gap: f64, floor: f64) -> f64 {
    let knee = (0..b.len().saturating_sub(3))
        .find(|&k| (1..=3).all(|j| b[k] - b[k + j] <= gap))
        .map(|k| b[k]);
    knee.unwrap_or_else(|| median(b)).max(floor)
}

fn median(b: &[f64]) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    let mut s = b.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub const DEFAULT_EPS_GAP: f64 = 0.1;
pub const DEFAULT_EPS_FLOOR: f64 = 1e-6;

pub fn determine_eps(points: &[Point2], min_pts: usize) -> Result<f64> {
    determine_eps_with(points, min_pts, DEFAULT_EPS_GAP, DEFAULT_EPS_FLOOR)
}

pub fn determine_eps_with(points: &[Point2], min_pts: usize, gap: f64, floor: f64) -> Result<f64> {
    if points.len() < min_pts + 4 {
        return Err(Error::param(format!(
            "eps estimation needs at least {} points, got {}",
            min_pts + 4,
            points.len()
        )));
    }
    let b = k_distance_list(points, min_pts)?;
    Ok(eps_from_k_distances(&b, gap, floor))
}

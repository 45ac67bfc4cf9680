//! Density-based clustering with core / border / noise labels.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::degeneracy::eps::{distance, Point2};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub eps: f64,
    /// Neighborhood size for a core point, the point itself included.
    pub min_pts: usize,
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::param("dbscan eps must be positive"));
        }
        if min_pts == 0 {
            return Err(Error::param("dbscan min_pts must be at least 1"));
        }
        Ok(Self { eps, min_pts })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointLabel {
    Core,
    Border,
    Noise,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct DbscanLabeling {
    pub labels: Vec<PointLabel>,
    /// Cluster id per point; `None` exactly for noise.
    pub clusters: Vec<Option<usize>>,
    pub cluster_count: usize,
}

impl DbscanLabeling {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_noise(&self, i: usize) -> bool {
        self.labels[i] == PointLabel::Noise
    }
}

fn neighbors(points: &[Point2], i: usize, eps: f64) -> Vec<usize> {
    let p = &points[i];
    (0..points.len())
        .filter(|&j| distance(p, &points[j]) <= eps)
        .collect()
}

/// Clusters are seeded in input order and expanded breadth-first in input
/// order, so a border point reachable from several clusters joins the one
/// discovered first.
pub fn dbscan(points: &[Point2], params: &DbscanParams) -> DbscanLabeling {
    let n = points.len();
    let mut labels = vec![PointLabel::Noise; n];
    let mut clusters: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut cluster_count = 0;

    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let seeds = neighbors(points, i, params.eps);
        if seeds.len() < params.min_pts {
            continue;
        }
        let c = cluster_count;
        cluster_count += 1;
        labels[i] = PointLabel::Core;
        clusters[i] = Some(c);
        let mut queue: VecDeque<usize> = seeds.into_iter().filter(|&j| j != i).collect();
        while let Some(j) = queue.pop_front() {
            if clusters[j].is_none() {
                clusters[j] = Some(c);
                labels[j] = PointLabel::Border;
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let nj = neighbors(points, j, params.eps);
            if nj.len() >= params.min_pts {
                labels[j] = PointLabel::Core;
                queue.extend(nj);
            }
        }
    }

    DbscanLabeling {
        labels,
        clusters,
        cluster_count,
    }
}

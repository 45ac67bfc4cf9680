//! Point-to-plane / point-to-edge Gauss-Newton registration against a known
//! scene.
//!
//! Jacobians follow the left world-frame perturbation of
//! [`apply_perturbation`]: for a sensor point `p` and pose `(R, t)` the
//! transformed point moves by `δθ × (R p) + δt`. Parameters are ordered
//! rotation first, translation second, so the normal matrix splits into
//! `[[H_rr, H_rt], [H_tr, H_tt]]`.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{apply_perturbation, Mat3, Pose, Vec3, Vec6};
use crate::scenesim::{Scan, Scene, SurfaceId, SurfaceKind};

pub type Mat6 = Matrix6<f64>;

/// Residuals below this are treated as exactly on the edge line.
const EDGE_ZERO: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetGeometry {
    Plane { normal: Vec3 },
    Edge { direction: Vec3 },
}

/// A sensor-frame point paired with the scene surface it must lie on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correspondence {
    pub point: Vec3,
    pub target: SurfaceId,
    pub anchor: Vec3,
    pub geometry: TargetGeometry,
}

impl Correspondence {
    pub fn from_surface(scene: &Scene, point: Vec3, target: SurfaceId) -> Option<Self> {
        let (anchor, geometry) = match target.kind {
            SurfaceKind::Plane => {
                let p = scene.planes.get(target.index)?;
                (p.anchor, TargetGeometry::Plane { normal: p.normal })
            }
            SurfaceKind::Edge => {
                let e = scene.edges.get(target.index)?;
                (
                    e.anchor,
                    TargetGeometry::Edge {
                        direction: e.direction,
                    },
                )
            }
        };
        Some(Self {
            point,
            target,
            anchor,
            geometry,
        })
    }

    pub fn kind(&self) -> SurfaceKind {
        match self.geometry {
            TargetGeometry::Plane { .. } => SurfaceKind::Plane,
            TargetGeometry::Edge { .. } => SurfaceKind::Edge,
        }
    }

    pub fn residual_jacobian(&self, pose: &Pose) -> (f64, Vec6) {
        match self.geometry {
            TargetGeometry::Plane { normal } => {
                plane_residual_jacobian(pose, &self.point, &self.anchor, &normal)
            }
            TargetGeometry::Edge { direction } => {
                edge_residual_jacobian(pose, &self.point, &self.anchor, &direction)
            }
        }
    }

    pub fn residual(&self, pose: &Pose) -> f64 {
        let q = pose.transform_point(&self.point) - self.anchor;
        match self.geometry {
            TargetGeometry::Plane { normal } => normal.dot(&q),
            TargetGeometry::Edge { direction } => q.cross(&direction).norm(),
        }
    }
}

fn stack(rot: Vec3, trans: Vec3) -> Vec6 {
    Vec6::new(rot.x, rot.y, rot.z, trans.x, trans.y, trans.z)
}

/// Signed point-to-plane distance `n·(R p + t − a)` and its gradient.
pub fn plane_residual_jacobian(pose: &Pose, point: &Vec3, anchor: &Vec3, normal: &Vec3) -> (f64, Vec6) {
    let rp = pose.rotation.rotate(point);
    let d = normal.dot(&(rp + pose.translation - anchor));
    (d, stack(rp.cross(normal), *normal))
}

/// Point-to-line distance `‖(R p + t − a) × u‖` and its gradient; the
/// gradient is defined as zero on the line itself.
pub fn edge_residual_jacobian(pose: &Pose, point: &Vec3, anchor: &Vec3, direction: &Vec3) -> (f64, Vec6) {
    let rp = pose.rotation.rotate(point);
    let e = rp + pose.translation - anchor;
    let c = e.cross(direction);
    let d = c.norm();
    if d < EDGE_ZERO {
        return (d, Vec6::zeros());
    }
    let grad = direction.cross(&c) / d;
    (d, stack(rp.cross(&grad), grad))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalEquations {
    pub h: Mat6,
    pub g: Vec6,
    pub rmse: f64,
    pub count: usize,
}

impl NormalEquations {
    fn sse(&self) -> f64 {
        self.rmse * self.rmse * self.count as f64
    }
}

/// `H = Σ j jᵀ`, `g = Σ j d`, accumulated sequentially in input order.
pub fn assemble_normal_equations(pose: &Pose, corrs: &[Correspondence]) -> Result<NormalEquations> {
    if corrs.is_empty() {
        return Err(Error::NoConstraints);
    }
    let mut h = Mat6::zeros();
    let mut g = Vec6::zeros();
    let mut sse = 0.0;
    for c in corrs {
        let (d, j) = c.residual_jacobian(pose);
        h.ger(1.0, &j, &j, 1.0);
        g.axpy(d, &j, 1.0);
        sse += d * d;
    }
    Ok(NormalEquations {
        h,
        g,
        rmse: (sse / corrs.len() as f64).sqrt(),
        count: corrs.len(),
    })
}

/// Sub-blocks of the 6×6 normal matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianBlocks {
    pub h_rr: Mat3,
    pub h_rt: Mat3,
    pub h_tr: Mat3,
    pub h_tt: Mat3,
}

impl HessianBlocks {
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            h_rr: self.h_rr * c,
            h_rt: self.h_rt * c,
            h_tr: self.h_tr * c,
            h_tt: self.h_tt * c,
        }
    }
}

fn symmetry_tolerance(scale: f64) -> f64 {
    1e-9 * scale.max(1.0)
}

pub fn split_hessian(h: &Mat6) -> Result<HessianBlocks> {
    let asym = (h - h.transpose()).abs().max();
    if !(asym <= symmetry_tolerance(h.abs().max())) {
        return Err(Error::Shape(format!(
            "normal matrix is not symmetric (max |H - Hᵀ| = {asym:e})"
        )));
    }
    Ok(HessianBlocks {
        h_rr: h.fixed_view::<3, 3>(0, 0).into_owned(),
        h_rt: h.fixed_view::<3, 3>(0, 3).into_owned(),
        h_tr: h.fixed_view::<3, 3>(3, 0).into_owned(),
        h_tt: h.fixed_view::<3, 3>(3, 3).into_owned(),
    })
}

/// How scan points are paired with scene surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Association {
    /// Use the simulator's surface labels.
    #[default]
    Labels,
    /// Re-associate every point to the nearest finite surface at each
    /// iterate; points farther than `max_distance` are dropped.
    NearestSurface { max_distance: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub step_tol: f64,
    pub damping_floor: f64,
    pub association: Association,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 20,
            step_tol: 1e-10,
            damping_floor: 1e-6,
            association: Association::Labels,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("solver.max_iters must be at least 1"));
        }
        if !(self.step_tol > 0.0) {
            return Err(Error::param("solver.step_tol must be positive"));
        }
        if !(self.damping_floor >= 0.0) {
            return Err(Error::param("solver.damping_floor must be non-negative"));
        }
        if let Association::NearestSurface { max_distance } = self.association {
            if !(max_distance > 0.0) {
                return Err(Error::param("solver.association.max_distance must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegistrationResult {
    pub pose: Pose,
    /// Accepted Gauss-Newton updates.
    pub iterations: usize,
    pub residual_rmse: f64,
    /// Blocks of the undamped normal matrix at the final pose.
    pub blocks: HessianBlocks,
    pub residual_count: usize,
    pub converged: bool,
    /// Correspondences used at the final iterate.
    pub correspondences: Vec<Correspondence>,
    /// Norm of every solved step, accepted or not.
    pub step_norms: Vec<f64>,
    /// RMSE after each accepted update, starting with the initial pose.
    pub rmse_history: Vec<f64>,
}

pub fn associate(scan: &Scan, scene: &Scene, pose: &Pose, mode: Association) -> Vec<Correspondence> {
    match mode {
        Association::Labels => scan
            .points
            .iter()
            .filter_map(|p| Correspondence::from_surface(scene, p.position, p.label))
            .collect(),
        Association::NearestSurface { max_distance } => scan
            .points
            .iter()
            .filter_map(|p| {
                let w = pose.transform_point(&p.position);
                let planes = scene
                    .planes
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.patch_distance(&w), SurfaceId::plane(i)));
                let edges = scene
                    .edges
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.segment_distance(&w), SurfaceId::edge(i)));
                let (dist, id) = planes
                    .chain(edges)
                    .min_by(|a, b| a.0.total_cmp(&b.0))?;
                (dist <= max_distance)
                    .then(|| Correspondence::from_surface(scene, p.position, id))
                    .flatten()
            })
            .collect(),
    }
}

fn solve_damped(ne: &NormalEquations, lambda: f64) -> Option<Vec6> {
    let a = ne.h + Mat6::identity() * lambda;
    let delta = a.cholesky()?.solve(&(-ne.g));
    delta.iter().all(|v| v.is_finite()).then_some(delta)
}

/// Damped Gauss-Newton: `(H + λI) Δ = −g`, `pose ← pose ⊕ Δ`. A step that
/// increases the squared residual is retried with tenfold damping; the
/// damping returns to `damping_floor` after every accepted step.
pub fn gauss_newton_solve(scan: &Scan, scene: &Scene, init: &Pose, opts: &SolverOptions) -> Result<RegistrationResult> {
    opts.validate()?;
    if scan.is_empty() {
        return Err(Error::NoConstraints);
    }
    let mut pose = *init;
    let mut corrs = associate(scan, scene, &pose, opts.association);
    let mut ne = assemble_normal_equations(&pose, &corrs)?;
    let mut step_norms = Vec::new();
    let mut rmse_history = vec![ne.rmse];
    let mut iterations = 0;
    let mut converged = false;

    'outer: for it in 1..=opts.max_iters {
        let mut lambda = opts.damping_floor;
        let mut accepted = None;
        for _ in 0..12 {
            let delta = solve_damped(&ne, lambda).ok_or(Error::Numerical { iteration: it })?;
            let norm = delta.norm();
            step_norms.push(norm);
            let candidate = apply_perturbation(&pose, &delta);
            if norm < opts.step_tol {
                pose = candidate;
                iterations = it;
                converged = true;
                break 'outer;
            }
            let trial = assemble_normal_equations(&candidate, &corrs)?;
            if trial.sse() <= ne.sse() * (1.0 + 1e-12) + 1e-24 {
                accepted = Some((candidate, trial, norm));
                break;
            }
            lambda = (lambda * 10.0).max(1e-9);
        }
        let Some((candidate, trial, norm)) = accepted else {
            // no descent direction left at any damping: a stationary point
            converged = true;
            break;
        };
        pose = candidate;
        iterations = it;
        ne = trial;
        rmse_history.push(ne.rmse);
        if let Association::NearestSurface { .. } = opts.association {
            corrs = associate(scan, scene, &pose, opts.association);
            ne = assemble_normal_equations(&pose, &corrs)?;
        }
        if norm < opts.step_tol {
            converged = true;
            break;
        }
    }

    if let Association::NearestSurface { .. } = opts.association {
        corrs = associate(scan, scene, &pose, opts.association);
    }
    let fin = assemble_normal_equations(&pose, &corrs)?;
    let blocks = split_hessian(&symmetrize(&fin.h))?;
    Ok(RegistrationResult {
        pose,
        iterations,
        residual_rmse: fin.rmse,
        blocks,
        residual_count: fin.count,
        converged,
        correspondences: corrs,
        step_norms,
        rmse_history,
    })
}

// Σ j jᵀ is symmetric up to rounding in the rank-1 updates.
fn symmetrize(h: &Mat6) -> Mat6 {
    (h + h.transpose()) * 0.5
}

/// Root-mean-square residual of `corrs` evaluated at `pose`.
pub fn residual_rmse(pose: &Pose, corrs: &[Correspondence]) -> f64 {
    if corrs.is_empty() {
        return f64::NAN;
    }
    let sse: f64 = corrs.iter().map(|c| c.residual(pose).powi(2)).sum();
    (sse / corrs.len() as f64).sqrt()
}

impl From<Vector6<f64>> for HessianBlocks {
    fn from(d: Vector6<f64>) -> Self {
        split_hessian(&Mat6::from_diagonal(&d)).expect("diagonal matrices are symmetric")
    }
}

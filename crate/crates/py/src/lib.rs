//! Python bindings for the degensense core.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use degensense::degeneracy::{self, Channel, SensingOptions};
use degensense::fusion::{self, Extrinsics};
use degensense::geometry::Mat3;
use degensense::pipeline::{self, OdometryConfig};
use degensense::registration::HessianBlocks;
use degensense::scenesim::{TrajectoryGT, TrajectorySample};

fn to_py(e: degensense::Error) -> PyErr {
    if e.is_io() {
        PyOSError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn mat3(rows: [[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|r, c| rows[r][c])
}

fn vec3(v: [f64; 3]) -> degensense::Vec3 {
    degensense::Vec3::new(v[0], v[1], v[2])
}

/// Unit quaternion, stored w-first with a canonical sign.
#[pyclass(name = "Quaternion", module = "degensense_py", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyQuaternion(degensense::Quaternion);

#[pymethods]
impl PyQuaternion {
    #[new]
    fn new(w: f64, x: f64, y: f64, z: f64) -> PyResult<Self> {
        degensense::Quaternion::try_new(w, x, y, z)
            .map(Self)
            .ok_or_else(|| PyValueError::new_err("quaternion has zero or non-finite norm"))
    }

    #[staticmethod]
    fn identity() -> Self {
        Self(degensense::Quaternion::identity())
    }

    #[staticmethod]
    fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        Self(degensense::Quaternion::from_axis_angle(&vec3(axis), angle))
    }

    /// Exponential map of a rotation vector.
    #[staticmethod]
    fn exp(v: [f64; 3]) -> Self {
        Self(degensense::Quaternion::exp(&vec3(v)))
    }

    fn log(&self) -> [f64; 3] {
        self.0.log().into()
    }

    /// (w, x, y, z)
    fn coords(&self) -> [f64; 4] {
        self.0.coords()
    }

    fn __mul__(&self, other: &Self) -> Self {
        Self(self.0.mul(&other.0))
    }

    fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        self.0.rotate(&vec3(v)).into()
    }

    fn angle_to(&self, other: &Self) -> f64 {
        self.0.angle_to(&other.0)
    }

    fn to_matrix(&self) -> [[f64; 3]; 3] {
        let m = self.0.to_matrix();
        std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
    }

    fn __repr__(&self) -> String {
        let [w, x, y, z] = self.0.coords();
        format!("Quaternion(w={w}, x={x}, y={y}, z={z})")
    }
}

#[pyclass(name = "Pose", module = "degensense_py", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyPose(degensense::Pose);

#[pymethods]
impl PyPose {
    #[new]
    #[pyo3(signature = (rotation = None, translation = [0.0; 3]))]
    fn new(rotation: Option<PyQuaternion>, translation: [f64; 3]) -> Self {
        let q = rotation.map_or_else(degensense::Quaternion::identity, |q| q.0);
        Self(degensense::Pose::new(q, vec3(translation)))
    }

    #[getter]
    fn rotation(&self) -> PyQuaternion {
        PyQuaternion(self.0.rotation)
    }

    #[getter]
    fn translation(&self) -> [f64; 3] {
        self.0.translation.into()
    }

    fn compose(&self, other: &Self) -> Self {
        Self(self.0.compose(&other.0))
    }

    fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    fn transform_point(&self, p: [f64; 3]) -> [f64; 3] {
        self.0.transform_point(&vec3(p)).into()
    }

    /// (rotation angle, translation distance) to `other`.
    fn distance_to(&self, other: &Self) -> (f64, f64) {
        self.0.distance_to(&other.0)
    }

    fn __repr__(&self) -> String {
        let t = self.0.translation;
        let [w, x, y, z] = self.0.rotation.coords();
        format!("Pose(t=[{}, {}, {}], q=[{w}, {x}, {y}, {z}])", t.x, t.y, t.z)
    }
}

/// Eigenvalues of a symmetric 3x3 matrix, descending.
#[pyfunction]
fn eig3_sym(m: [[f64; 3]; 3]) -> PyResult<[f64; 3]> {
    degeneracy::eig3_sym(&mat3(m)).map_err(to_py)
}

/// (s_rot, s_trans, no_constraints) from the rotation and translation
/// diagonal blocks of the normal matrix.
#[pyfunction]
#[pyo3(signature = (h_rr, h_tt, rel_floor = degeneracy::DEFAULT_RELATIVE_FLOOR))]
fn degeneracy_factors(h_rr: [[f64; 3]; 3], h_tt: [[f64; 3]; 3], rel_floor: f64) -> PyResult<(f64, f64, bool)> {
    let blocks = HessianBlocks {
        h_rr: mat3(h_rr),
        h_rt: Mat3::zeros(),
        h_tr: Mat3::zeros(),
        h_tt: mat3(h_tt),
    };
    let f = degeneracy::degeneracy_factors(&blocks, rel_floor).map_err(to_py)?;
    Ok((f.s_rot, f.s_trans, f.no_constraints))
}

#[pyfunction]
fn k_distance_list(points: Vec<[f64; 2]>, min_pts: usize) -> PyResult<Vec<f64>> {
    degeneracy::k_distance_list(&points, min_pts).map_err(to_py)
}

#[pyfunction]
fn determine_eps(points: Vec<[f64; 2]>, min_pts: usize) -> PyResult<f64> {
    degeneracy::determine_eps(&points, min_pts).map_err(to_py)
}

/// Returns (labels, clusters): labels are "core", "border" or "noise";
/// clusters hold the cluster id or None for noise.
#[pyfunction]
fn dbscan(points: Vec<[f64; 2]>, eps: f64, min_pts: usize) -> PyResult<(Vec<&'static str>, Vec<Option<usize>>)> {
    let params = degeneracy::DbscanParams::new(eps, min_pts).map_err(to_py)?;
    let out = degeneracy::dbscan(&points, &params);
    let labels = out
        .labels
        .iter()
        .map(|l| match l {
            degeneracy::PointLabel::Core => "core",
            degeneracy::PointLabel::Border => "border",
            degeneracy::PointLabel::Noise => "noise",
        })
        .collect();
    Ok((labels, out.clusters))
}

fn sensing_options(warmup: usize, capacity: usize, min_pts: usize) -> PyResult<SensingOptions> {
    let opts = SensingOptions {
        warmup,
        capacity,
        min_pts,
        ..SensingOptions::default()
    };
    opts.validate().map_err(to_py)?;
    Ok(opts)
}

/// Sliding window of one factor channel with density-based outlier sensing.
#[pyclass(name = "FactorWindow", module = "degensense_py")]
struct PyFactorWindow(degeneracy::FactorWindow);

#[pymethods]
impl PyFactorWindow {
    #[new]
    #[pyo3(signature = (warmup = 400, capacity = 1000, min_pts = 3))]
    fn new(warmup: usize, capacity: usize, min_pts: usize) -> PyResult<Self> {
        let opts = sensing_options(warmup, capacity, min_pts)?;
        degeneracy::FactorWindow::new(Channel::Translation, opts).map(Self).map_err(to_py)
    }

    /// Appends a sample; True when it is flagged degenerate.
    fn sense(&mut self, frame_index: u64, value: f64) -> bool {
        self.0.sense(frame_index, value)
    }

    #[getter]
    fn x_m(&self) -> f64 {
        self.0.x_m()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Independent rotation and translation windows.
#[pyclass(name = "DegeneracySensor", module = "degensense_py")]
struct PyDegeneracySensor {
    inner: degeneracy::DegeneracySensor,
    next_frame: u64,
}

#[pymethods]
impl PyDegeneracySensor {
    #[new]
    #[pyo3(signature = (warmup = 400, capacity = 1000, min_pts = 3))]
    fn new(warmup: usize, capacity: usize, min_pts: usize) -> PyResult<Self> {
        let opts = sensing_options(warmup, capacity, min_pts)?;
        Ok(Self {
            inner: degeneracy::DegeneracySensor::new(opts).map_err(to_py)?,
            next_frame: 0,
        })
    }

    /// (rot_degenerate, trans_degenerate) for the next frame's factors.
    fn sense(&mut self, s_rot: f64, s_trans: f64) -> (bool, bool) {
        let factor = degeneracy::DegeneracyFactor {
            frame_index: self.next_frame,
            timestamp: self.next_frame as f64,
            s_rot,
            s_trans,
            no_constraints: false,
        };
        self.next_frame += 1;
        let r = self.inner.sense(&factor);
        (r.rot_degenerate, r.trans_degenerate)
    }
}

#[pyfunction]
fn fuse_translation(t_imu: [f64; 3], t_lidar: [f64; 3], s_trans: f64) -> PyResult<[f64; 3]> {
    fusion::fuse_translation(&vec3(t_imu), &vec3(t_lidar), s_trans)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn fuse_rotation(q_imu: &PyQuaternion, q_lidar: &PyQuaternion, s_rot: f64) -> PyResult<PyQuaternion> {
    fusion::fuse_rotation(&q_imu.0, &q_lidar.0, s_rot)
        .map(PyQuaternion)
        .map_err(to_py)
}

/// IMU pose expressed in the LiDAR frame through the IMU-to-LiDAR extrinsic.
#[pyfunction]
fn project_imu_pose(imu_pose: &PyPose, imu_to_lidar: &PyPose) -> PyPose {
    PyPose(fusion::project_imu_pose(&imu_pose.0, &Extrinsics { pose_imu_to_lidar: imu_to_lidar.0 }))
}

#[pyclass(name = "OdometryConfig", module = "degensense_py", from_py_object)]
#[derive(Clone)]
struct PyOdometryConfig(OdometryConfig);

#[pymethods]
impl PyOdometryConfig {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        OdometryConfig::from_toml(text).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        OdometryConfig::load(&path).map(Self).map_err(to_py)
    }

    fn to_toml(&self) -> String {
        self.0.to_toml()
    }

    #[getter]
    fn get_seed(&self) -> u64 {
        self.0.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.0.seed = seed;
    }

    #[getter]
    fn get_fusion(&self) -> bool {
        self.0.fusion
    }

    #[setter]
    fn set_fusion(&mut self, fusion: bool) {
        self.0.fusion = fusion;
    }
}

#[pyclass(name = "FrameRecord", module = "degensense_py", frozen, get_all)]
struct PyFrameRecord {
    frame_index: u64,
    timestamp: f64,
    pose_lo: PyPose,
    pose_fused: PyPose,
    s_rot: f64,
    s_trans: f64,
    rot_flag: bool,
    trans_flag: bool,
    residual_rmse_before: f64,
    residual_rmse_after: f64,
    registration_failed: bool,
}

#[pyclass(name = "OdometryRun", module = "degensense_py", frozen)]
struct PyOdometryRun(pipeline::OdometryRun);

fn metrics_dict(est: &[TrajectorySample], gt: &TrajectoryGT) -> PyResult<std::collections::HashMap<&'static str, f64>> {
    let m = pipeline::trajectory_metrics(est, gt).map_err(to_py)?;
    Ok([
        ("ate_rmse", m.ate_rmse),
        ("end_to_end_error", m.end_to_end_error),
        ("max_error", m.max_error),
    ]
    .into())
}

#[pymethods]
impl PyOdometryRun {
    fn __len__(&self) -> usize {
        self.0.records.len()
    }

    #[getter]
    fn records(&self) -> Vec<PyFrameRecord> {
        self.0
            .records
            .iter()
            .map(|r| PyFrameRecord {
                frame_index: r.frame_index,
                timestamp: r.timestamp,
                pose_lo: PyPose(r.pose_lo),
                pose_fused: PyPose(r.pose_fused),
                s_rot: r.s_rot,
                s_trans: r.s_trans,
                rot_flag: r.rot_flag,
                trans_flag: r.trans_flag,
                residual_rmse_before: r.residual_rmse_before,
                residual_rmse_after: r.residual_rmse_after,
                registration_failed: r.registration_failed,
            })
            .collect()
    }

    /// Ground-truth poses as (timestamp, Pose) pairs.
    fn ground_truth(&self) -> Vec<(f64, PyPose)> {
        self.0
            .ground_truth
            .samples()
            .iter()
            .map(|s| (s.timestamp, PyPose(s.pose)))
            .collect()
    }

    /// Metrics of the fused (default) or LiDAR-only ("lo") trajectory.
    #[pyo3(signature = (which = "fused"))]
    fn metrics(&self, which: &str) -> PyResult<std::collections::HashMap<&'static str, f64>> {
        let est = match which {
            "fused" => self.0.fused_trajectory(),
            "lo" => self.0.lo_trajectory(),
            _ => return Err(PyValueError::new_err("which must be \"fused\" or \"lo\"")),
        };
        metrics_dict(&est, &self.0.ground_truth)
    }

    fn export_trace(&self, path: PathBuf) -> PyResult<()> {
        pipeline::export_trace(&self.0.trace(), &path).map_err(to_py)
    }
}

#[pyfunction]
fn run_odometry(config: &PyOdometryConfig) -> PyResult<PyOdometryRun> {
    pipeline::run_odometry(&config.0).map(PyOdometryRun).map_err(to_py)
}

/// Metrics of an estimated TUM trajectory file against a ground-truth one.
#[pyfunction]
fn trajectory_metrics(estimate: PathBuf, ground_truth: PathBuf) -> PyResult<std::collections::HashMap<&'static str, f64>> {
    let est = pipeline::load_tum(&estimate).map_err(to_py)?;
    let gt = TrajectoryGT::new(pipeline::load_tum(&ground_truth).map_err(to_py)?).map_err(to_py)?;
    metrics_dict(&est, &gt)
}

#[pymodule]
fn degensense_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuaternion>()?;
    m.add_class::<PyPose>()?;
    m.add_class::<PyFactorWindow>()?;
    m.add_class::<PyDegeneracySensor>()?;
    m.add_class::<PyOdometryConfig>()?;
    m.add_class::<PyFrameRecord>()?;
    m.add_class::<PyOdometryRun>()?;
    m.add_function(wrap_pyfunction!(eig3_sym, m)?)?;
    m.add_function(wrap_pyfunction!(degeneracy_factors, m)?)?;
    m.add_function(wrap_pyfunction!(k_distance_list, m)?)?;
    m.add_function(wrap_pyfunction!(determine_eps, m)?)?;
    m.add_function(wrap_pyfunction!(dbscan, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_translation, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_rotation, m)?)?;
    m.add_function(wrap_pyfunction!(project_imu_pose, m)?)?;
    m.add_function(wrap_pyfunction!(run_odometry, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory_metrics, m)?)?;
    Ok(())
}

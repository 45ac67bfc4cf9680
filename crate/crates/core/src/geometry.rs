//! Rigid-body pose algebra.
//!
//! Rotations are unit quaternions kept in a canonical sign (`w >= 0`, ties
//! broken on `x`, then `y`, then `z`). Small-perturbation updates are applied
//! on the left, in the world frame: `R' = Exp(δθ) R`, `t' = t + δt`, with the
//! 6-vector ordered rotation first, translation second.

use std::fmt;

use nalgebra::{Matrix3, Vector3, Vector6};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec6 = Vector6<f64>;

/// Unit quaternion `w + xi + yj + zk`.
#[derive(Clone, Copy, PartialEq)]
pub struct Quaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl fmt::Debug for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Quaternion(w={}, x={}, y={}, z={})",
            self.w, self.x, self.y, self.z
        )
    }
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl TryFrom<[f64; 4]> for Quaternion {
    type Error = String;

    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        Quaternion::try_new(c[0], c[1], c[2], c[3]).ok_or_else(|| {
            format!("quaternion {c:?} has zero or non-finite norm")
        })
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl Quaternion {
    pub const fn identity() -> Self {
        Self {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    /// Normalizes and canonicalizes. Panics on zero or non-finite input;
    /// use [`Quaternion::try_new`] when the input is untrusted.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self::try_new(w, x, y, z).expect("quaternion must have finite non-zero norm")
    }

    pub fn try_new(w: f64, x: f64, y: f64, z: f64) -> Option<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n == 0.0 {
            return None;
        }
        // already unit: keep the exact values so stored quaternions round-trip
        if (n - 1.0).abs() <= 2.0 * f64::EPSILON {
            return Some(Self::canonical(w, x, y, z));
        }
        Some(Self::canonical(w / n, x / n, y / n, z / n))
    }

    fn canonical(w: f64, x: f64, y: f64, z: f64) -> Self {
        let flip = [w, x, y, z]
            .into_iter()
            .find(|c| *c != 0.0)
            .is_some_and(|c| c < 0.0);
        if flip {
            Self {
                w: -w,
                x: -x,
                y: -y,
                z: -z,
            }
        } else {
            Self { w, x, y, z }
        }
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Components as `[w, x, y, z]`.
    pub fn coords(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        Self::exp(&(axis * (angle / n)))
    }

    /// Rotation about +z.
    pub fn from_yaw(yaw: f64) -> Self {
        Self::from_axis_angle(&Vec3::z(), yaw)
    }

    /// Exponential map from a rotation vector (axis * angle, radians).
    pub fn exp(v: &Vec3) -> Self {
        let theta = v.norm();
        let half = 0.5 * theta;
        let (w, k) = if theta < 1e-12 {
            // sin(θ/2)/θ -> 1/2
            (1.0, 0.5)
        } else {
            (half.cos(), half.sin() / theta)
        };
        Self::new(w, k * v.x, k * v.y, k * v.z)
    }

    /// Logarithm map: rotation vector with angle in `[0, π]`.
    pub fn log(&self) -> Vec3 {
        let v = self.vector();
        let s = v.norm();
        if s < 1e-15 {
            return 2.0 * v;
        }
        let angle = 2.0 * s.atan2(self.w);
        v * (angle / s)
    }

    pub fn conjugate(&self) -> Self {
        Self::canonical(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Hamilton product `self * other`, renormalized.
    pub fn mul(&self, o: &Self) -> Self {
        let (a, b) = (self, o);
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        rotate_point(self, v)
    }

    pub fn to_matrix(&self) -> Mat3 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Geodesic angle between two rotations; `q` and `-q` are the same rotation.
    pub fn angle_to(&self, other: &Self) -> f64 {
        let d = self.dot(other).abs().min(1.0);
        // 2*acos(d) is ill-conditioned near d = 1; use the chord instead.
        let diff = if self.dot(other) >= 0.0 {
            [
                self.w - other.w,
                self.x - other.x,
                self.y - other.y,
                self.z - other.z,
            ]
        } else {
            [
                self.w + other.w,
                self.x + other.x,
                self.y + other.y,
                self.z + other.z,
            ]
        };
        let chord = diff.iter().map(|c| c * c).sum::<f64>().sqrt();
        if d > 0.9 {
            4.0 * (0.5 * chord).asin()
        } else {
            2.0 * d.acos()
        }
    }

    /// Same rotation within `tol` radians.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.angle_to(other) <= tol
    }

    /// Yaw (rotation about +z) of the heading, assuming a ZYX decomposition.
    pub fn yaw(&self) -> f64 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z))
    }

    /// Spherical interpolation, `t = 0` gives `self`.
    pub fn slerp(&self, other: &Self, t: f64) -> Self {
        let rel = self.conjugate().mul(other);
        self.mul(&Self::exp(&(rel.log() * t)))
    }
}

/// Rotates `v` by the unit quaternion `q`.
pub fn rotate_point(q: &Quaternion, v: &Vec3) -> Vec3 {
    // v' = v + 2w (u x v) + 2 u x (u x v)
    let u = q.vector();
    let uv = u.cross(v);
    let uuv = u.cross(&uv);
    v + 2.0 * (q.w * uv + uuv)
}

/// Rigid transform mapping sensor coordinates into the world frame.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Pose {
    pub rotation: Quaternion,
    pub translation: Vec3,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Quaternion::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Quaternion, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(Quaternion::identity(), t)
    }

    pub fn inverse(&self) -> Self {
        let r = self.rotation.conjugate();
        Self::new(r, -r.rotate(&self.translation))
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    pub fn compose(&self, other: &Self) -> Self {
        compose(self, other)
    }

    /// Rotation angle (radians) and translation distance between two poses.
    pub fn distance_to(&self, other: &Self) -> (f64, f64) {
        (
            self.rotation.angle_to(&other.rotation),
            (self.translation - other.translation).norm(),
        )
    }
}

/// `a ∘ b`: applies `b` first, then `a`.
pub fn compose(a: &Pose, b: &Pose) -> Pose {
    Pose::new(
        a.rotation.mul(&b.rotation),
        a.rotation.rotate(&b.translation) + a.translation,
    )
}

/// Left (world-frame) update: `R ← Exp(δθ)·R`, `t ← t + δt`.
pub fn apply_perturbation(p: &Pose, delta: &Vec6) -> Pose {
    let dtheta = Vec3::new(delta[0], delta[1], delta[2]);
    let dt = Vec3::new(delta[3], delta[4], delta[5]);
    let rotation = if dtheta == Vec3::zeros() {
        p.rotation
    } else {
        Quaternion::exp(&dtheta).mul(&p.rotation)
    };
    Pose::new(rotation, p.translation + dt)
}

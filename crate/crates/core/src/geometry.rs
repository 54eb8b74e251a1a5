//! Rotation and similarity-transform algebra.
//!
//! Poses follow one convention throughout the crate: a pose maps points from
//! the camera frame into the frame of the trajectory it belongs to.

use nalgebra::{Matrix3, Matrix4, Vector3};
use thiserror::Error;

use crate::tolerances::{QUATERNION_NORM_TOL, ROTATION_MATRIX_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("quaternion norm {norm} differs from 1 by more than {tol:e}")]
    NotNormalized { norm: f64, tol: f64 },
    #[error("quaternion has zero or non-finite norm")]
    DegenerateQuaternion,
    #[error("matrix is not a proper rotation (|RᵀR - I| = {orthogonality:e}, det = {det})")]
    NotRotation { orthogonality: f64, det: f64 },
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("translation has non-finite components")]
    NonFiniteTranslation,
}

/// Unit quaternion stored in canonical sign (`w >= 0`, ties broken by the
/// first nonzero vector component).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: Self = Self { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Accepts an (almost) normalized quaternion. Inputs whose norm is off by
    /// more than [`QUATERNION_NORM_TOL`] are rejected; the rest are
    /// renormalized and sign-canonicalized.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        Self::with_tolerance(w, x, y, z, QUATERNION_NORM_TOL)
    }

    pub fn with_tolerance(w: f64, x: f64, y: f64, z: f64, tol: f64) -> Result<Self, GeometryError> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(GeometryError::DegenerateQuaternion);
        }
        if (norm - 1.0).abs() > tol {
            return Err(GeometryError::NotNormalized { norm, tol });
        }
        if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            // Already unit up to rounding; keep the bits so files round-trip.
            return Ok(Self::canonical(w, x, y, z));
        }
        Ok(Self::canonical(w / norm, x / norm, y / norm, z / norm))
    }

    /// Normalizes any finite nonzero 4-vector.
    pub fn normalize(w: f64, x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        Self::with_tolerance(w, x, y, z, f64::INFINITY)
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Self, GeometryError> {
        let n = axis.norm();
        if !n.is_finite() || n == 0.0 {
            if angle == 0.0 {
                return Ok(Self::IDENTITY);
            }
            return Err(GeometryError::DegenerateQuaternion);
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let a = axis / n;
        Self::normalize(c, a.x * s, a.y * s, a.z * s)
    }

    /// Rotation vector (axis times angle) to quaternion.
    pub fn from_rotation_vector(v: &Vector3<f64>) -> Self {
        let angle = v.norm();
        if angle < 1e-300 {
            return Self::IDENTITY;
        }
        Self::from_axis_angle(v, angle).unwrap_or(Self::IDENTITY)
    }

    fn canonical(w: f64, x: f64, y: f64, z: f64) -> Self {
        let flip = if w != 0.0 {
            w < 0.0
        } else if x != 0.0 {
            x < 0.0
        } else if y != 0.0 {
            y < 0.0
        } else {
            z < 0.0
        };
        if flip {
            Self { w: -w, x: -x, y: -y, z: -z }
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

    /// Components in `(w, x, y, z)` order.
    pub fn wxyz(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Components in `(x, y, z, w)` order, as stored on disk.
    pub fn xyzw(&self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn conjugate(&self) -> Self {
        Self::canonical(self.w, -self.x, -self.y, -self.z)
    }

    /// Hamilton product `self * rhs` (apply `rhs` first).
    pub fn mul(&self, rhs: &Self) -> Self {
        let (a, b) = (self, rhs);
        let w = a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z;
        let x = a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y;
        let y = a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x;
        let z = a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w;
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Self::canonical(w / n, x / n, y / n, z / n)
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let u = Vector3::new(self.x, self.y, self.z);
        let uv = u.cross(v);
        let uuv = u.cross(&uv);
        v + (uv * self.w + uuv) * 2.0
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let v = (self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        2.0 * v.atan2(self.w.abs())
    }
}

/// Rotation matrix of a unit quaternion.
pub fn quat_to_matrix(q: &UnitQuaternion) -> Matrix3<f64> {
    let [w, x, y, z] = q.wxyz();
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, xz, yz) = (x * y, x * z, y * z);
    let (wx, wy, wz) = (w * x, w * y, w * z);
    Matrix3::new(
        1.0 - 2.0 * (yy + zz),
        2.0 * (xy - wz),
        2.0 * (xz + wy),
        2.0 * (xy + wz),
        1.0 - 2.0 * (xx + zz),
        2.0 * (yz - wx),
        2.0 * (xz - wy),
        2.0 * (yz + wx),
        1.0 - 2.0 * (xx + yy),
    )
}

/// Quaternion of a proper rotation matrix (Shepperd's branch selection).
pub fn matrix_to_quat(m: &Matrix3<f64>) -> Result<UnitQuaternion, GeometryError> {
    check_rotation(m)?;
    let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
    let (w, x, y, z) = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        (
            0.25 * s,
            (m[(2, 1)] - m[(1, 2)]) / s,
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(1, 0)] - m[(0, 1)]) / s,
        )
    } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
        let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
        (
            (m[(2, 1)] - m[(1, 2)]) / s,
            0.25 * s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
        )
    } else if m[(1, 1)] > m[(2, 2)] {
        let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
        (
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            0.25 * s,
            (m[(1, 2)] + m[(2, 1)]) / s,
        )
    } else {
        let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
        (
            (m[(1, 0)] - m[(0, 1)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
            (m[(1, 2)] + m[(2, 1)]) / s,
            0.25 * s,
        )
    };
    UnitQuaternion::normalize(w, x, y, z)
}

fn check_rotation(m: &Matrix3<f64>) -> Result<(), GeometryError> {
    let orthogonality = (m.transpose() * m - Matrix3::identity()).abs().max();
    let det = m.determinant();
    if !(orthogonality <= ROTATION_MATRIX_TOL) || !((det - 1.0).abs() <= ROTATION_MATRIX_TOL) {
        return Err(GeometryError::NotRotation { orthogonality, det });
    }
    Ok(())
}

/// A proper rotation. Stored as a canonical unit quaternion; the matrix form
/// is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    q: UnitQuaternion,
}

impl Default for Rotation3 {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Rotation3 {
    pub const IDENTITY: Self = Self { q: UnitQuaternion::IDENTITY };

    pub fn from_quaternion(q: UnitQuaternion) -> Self {
        Self { q }
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self, GeometryError> {
        matrix_to_quat(m).map(Self::from_quaternion)
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Self, GeometryError> {
        UnitQuaternion::from_axis_angle(axis, angle).map(Self::from_quaternion)
    }

    pub fn from_rotation_vector(v: &Vector3<f64>) -> Self {
        Self::from_quaternion(UnitQuaternion::from_rotation_vector(v))
    }

    pub fn quaternion(&self) -> UnitQuaternion {
        self.q
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        quat_to_matrix(&self.q)
    }

    pub fn inverse(&self) -> Self {
        Self { q: self.q.conjugate() }
    }

    /// `self ∘ rhs`: apply `rhs` first.
    pub fn compose(&self, rhs: &Self) -> Self {
        Self { q: self.q.mul(&rhs.q) }
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.q.rotate(v)
    }

    pub fn angle(&self) -> f64 {
        self.q.angle()
    }

    /// Angle of the relative rotation `self⁻¹ ∘ other`.
    pub fn angle_to(&self, other: &Self) -> f64 {
        self.inverse().compose(other).angle()
    }
}

/// Similarity transform `x ↦ s·R·x + t`, the homogeneous matrix `(sR t; 0 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sim3Transform {
    scale: f64,
    rotation: Rotation3,
    translation: Vector3<f64>,
}

impl Default for Sim3Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Sim3Transform {
    pub fn new(scale: f64, rotation: Rotation3, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(GeometryError::InvalidScale(scale));
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFiniteTranslation);
        }
        Ok(Self { scale, rotation, translation })
    }

    /// Rigid transform (unit scale).
    pub fn rigid(rotation: Rotation3, translation: Vector3<f64>) -> Self {
        Self { scale: 1.0, rotation, translation }
    }

    pub fn identity() -> Self {
        Self::rigid(Rotation3::IDENTITY, Vector3::zeros())
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &Rotation3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Same rotation and translation with the scale replaced.
    pub fn with_scale(&self, scale: f64) -> Result<Self, GeometryError> {
        Self::new(scale, self.rotation, self.translation)
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.apply(p) * self.scale + self.translation
    }

    /// `self ∘ rhs`: apply `rhs` first.
    pub fn compose(&self, rhs: &Self) -> Self {
        Self {
            scale: self.scale * rhs.scale,
            rotation: self.rotation.compose(&rhs.rotation),
            translation: self.rotation.apply(&rhs.translation) * self.scale + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let inv_scale = 1.0 / self.scale;
        let inv_rot = self.rotation.inverse();
        Self {
            scale: inv_scale,
            rotation: inv_rot,
            translation: -(inv_rot.apply(&self.translation) * inv_scale),
        }
    }

    /// Homogeneous 4×4 matrix `(sR t; 0 1)`.
    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(self.rotation.matrix() * self.scale));
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Precomputes `sR` for applying the transform to many points.
    pub fn linear_part(&self) -> Matrix3<f64> {
        self.rotation.matrix() * self.scale
    }
}

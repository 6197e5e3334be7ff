//! Quaternion and dual-quaternion algebra for rigid transforms.
//!
//! Quaternions are stored scalar-first `(w, x, y, z)` and multiplied with the
//! Hamilton (right-handed) product. A unit dual quaternion `p + εd` encodes a
//! pose with rotation `p` and body-frame translation `b` through
//! `d = ½ p ⊗ (0, b)`. Poses are usually given with a world-frame translation
//! `t = p b p*`, for which the same dual part reads `d = ½ (0, t) ⊗ p`; with
//! that reading dual-quaternion products match homogeneous-matrix products
//! `[R t; 0 1]`.
//!
//! Because `q̂` and `-q̂` describe the same pose, distances are computed on a
//! canonical representative: `primary.w ≥ 0`, and when `primary.w` vanishes
//! the first nonzero vector component of the primary part is positive.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Vector3;
use thiserror::Error;

/// Tolerance applied when validating that an operand is unit.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Norm drift above which a product of unit dual quaternions is re-normalized.
pub const RENORMALIZE_DRIFT: f64 = 1e-12;

const SIGN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuatError {
    #[error("operand is not a unit {kind} (norm deviation {deviation:e})")]
    NonUnit { kind: &'static str, deviation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const ZERO: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Pure quaternion `(0, v)`.
    pub fn pure(v: &Vector3<f64>) -> Self {
        Self::new(0.0, v.x, v.y, v.z)
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let a = axis / n;
        Self::new(c, s * a.x, s * a.y, s * a.z)
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn conj(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.w * k, self.x * k, self.y * k, self.z * k)
    }

    /// Returns `self / ‖self‖`, or the identity for a zero quaternion.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            Self::IDENTITY
        } else {
            self.scale(1.0 / n)
        }
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Rotates `v` by this (unit) quaternion: `q ⊗ (0, v) ⊗ q*`.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        quat_mul(&quat_mul(self, &Self::pure(v)), &self.conj()).vector()
    }

    fn check_unit(&self) -> Result<(), QuatError> {
        let deviation = (self.norm() - 1.0).abs();
        if deviation > UNIT_TOLERANCE || !deviation.is_finite() {
            return Err(QuatError::NonUnit { kind: "quaternion", deviation });
        }
        Ok(())
    }
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        quat_mul(&self, &o)
    }
}

/// Hamilton product `a ⊗ b`.
pub fn quat_mul(a: &Quaternion, b: &Quaternion) -> Quaternion {
    Quaternion {
        w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    }
}

/// `primary + ε dual`, with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualQuaternion {
    pub primary: Quaternion,
    pub dual: Quaternion,
}

impl Default for DualQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl DualQuaternion {
    pub const IDENTITY: DualQuaternion =
        DualQuaternion { primary: Quaternion::IDENTITY, dual: Quaternion::ZERO };

    pub const fn new(primary: Quaternion, dual: Quaternion) -> Self {
        Self { primary, dual }
    }

    pub fn to_array(self) -> [f64; 8] {
        let [a, b, c, d] = self.primary.to_array();
        let [e, f, g, h] = self.dual.to_array();
        [a, b, c, d, e, f, g, h]
    }

    pub fn conj(&self) -> Self {
        dq_conj(self)
    }

    /// Deviation from the unit conditions: `max(|‖p‖ − 1|, |p·d|)`.
    pub fn unit_deviation(&self) -> f64 {
        let norm_dev = (self.primary.norm() - 1.0).abs();
        let ortho = self.primary.dot(&self.dual).abs();
        norm_dev.max(ortho)
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        self.unit_deviation() <= tol
    }

    /// Scales to a unit primary part and removes the dual component parallel to it.
    pub fn normalized(&self) -> Self {
        let n = self.primary.norm();
        if n == 0.0 {
            return *self;
        }
        let p = self.primary.scale(1.0 / n);
        let d = self.dual.scale(1.0 / n);
        let d = d - p.scale(p.dot(&d));
        Self::new(p, d)
    }

    /// Picks the representative of `{q̂, −q̂}` with `primary.w ≥ 0`.
    pub fn canonical(&self) -> Self {
        let p = &self.primary;
        let flip = if p.w.abs() > SIGN_EPS {
            p.w < 0.0
        } else {
            [p.x, p.y, p.z]
                .into_iter()
                .find(|c| c.abs() > SIGN_EPS)
                .is_some_and(|c| c < 0.0)
        };
        if flip {
            Self::new(-self.primary, -self.dual)
        } else {
            *self
        }
    }

    fn check_unit(&self) -> Result<(), QuatError> {
        let deviation = self.unit_deviation();
        if deviation > UNIT_TOLERANCE || !deviation.is_finite() {
            return Err(QuatError::NonUnit { kind: "dual quaternion", deviation });
        }
        Ok(())
    }
}

impl Add for DualQuaternion {
    type Output = DualQuaternion;
    fn add(self, o: DualQuaternion) -> DualQuaternion {
        DualQuaternion::new(self.primary + o.primary, self.dual + o.dual)
    }
}

impl Sub for DualQuaternion {
    type Output = DualQuaternion;
    fn sub(self, o: DualQuaternion) -> DualQuaternion {
        DualQuaternion::new(self.primary - o.primary, self.dual - o.dual)
    }
}

impl Mul for DualQuaternion {
    type Output = DualQuaternion;
    fn mul(self, o: DualQuaternion) -> DualQuaternion {
        dq_mul(&self, &o)
    }
}

/// Dual-quaternion product `a ⊗ b`.
///
/// When both operands are unit, the result is re-normalized once its primary
/// norm drifts by more than [`RENORMALIZE_DRIFT`]; long chains of pose
/// compositions stay on the unit manifold this way. Non-unit operands are
/// multiplied as-is. The result is not canonicalized.
pub fn dq_mul(a: &DualQuaternion, b: &DualQuaternion) -> DualQuaternion {
    let primary = quat_mul(&a.primary, &b.primary);
    let dual = quat_mul(&a.primary, &b.dual) + quat_mul(&a.dual, &b.primary);
    let out = DualQuaternion::new(primary, dual);
    if a.is_unit(UNIT_TOLERANCE)
        && b.is_unit(UNIT_TOLERANCE)
        && (out.primary.norm() - 1.0).abs() > RENORMALIZE_DRIFT
    {
        out.normalized()
    } else {
        out
    }
}

pub fn dq_conj(a: &DualQuaternion) -> DualQuaternion {
    DualQuaternion::new(a.primary.conj(), a.dual.conj())
}

/// Canonicalized difference `a* ⊗ b`: the transform taking `a` to `b`.
pub fn dq_diff(a: &DualQuaternion, b: &DualQuaternion) -> Result<DualQuaternion, QuatError> {
    a.check_unit()?;
    b.check_unit()?;
    Ok(dq_mul(&dq_conj(a), b).canonical())
}

/// Unit dual quaternion for a rotation and a world-frame translation,
/// `q_r + ε ½ (0, t) ⊗ q_r`, canonicalized.
pub fn dq_from_pose(
    rotation: &Quaternion,
    translation: &Vector3<f64>,
) -> Result<DualQuaternion, QuatError> {
    rotation.check_unit()?;
    let dual = quat_mul(&Quaternion::pure(translation), rotation).scale(0.5);
    Ok(DualQuaternion::new(*rotation, dual).canonical())
}

/// `q_r + ε ½ q_r ⊗ (0, b)` with `b` expressed in the rotated frame.
///
/// Equals [`dq_from_pose`] with `t = q_r b q_r*`.
pub fn dq_from_body_translation(
    rotation: &Quaternion,
    body_translation: &Vector3<f64>,
) -> Result<DualQuaternion, QuatError> {
    rotation.check_unit()?;
    let dual = quat_mul(rotation, &Quaternion::pure(body_translation)).scale(0.5);
    Ok(DualQuaternion::new(*rotation, dual).canonical())
}

/// Inverse of [`dq_from_pose`]: `t = 2 q_d ⊗ q_p*`. The rotation comes back
/// in canonical sign.
pub fn dq_to_pose(a: &DualQuaternion) -> Result<(Quaternion, Vector3<f64>), QuatError> {
    a.check_unit()?;
    let c = a.canonical();
    let t = quat_mul(&c.dual, &c.primary.conj()).scale(2.0);
    Ok((c.primary, t.vector()))
}

/// `‖dq_diff(a, b) − Î‖₂` over all eight components.
pub fn dq_distance(a: &DualQuaternion, b: &DualQuaternion) -> Result<f64, QuatError> {
    let diff = dq_diff(a, b)? - DualQuaternion::IDENTITY;
    Ok(diff.primary.norm_squared().add(diff.dual.norm_squared()).sqrt())
}

/// `‖P(dq_diff(a, b) − Î)‖₂`: the rotation term only.
pub fn dq_rotation_distance(a: &DualQuaternion, b: &DualQuaternion) -> Result<f64, QuatError> {
    let diff = dq_diff(a, b)?;
    Ok((diff.primary - Quaternion::IDENTITY).norm())
}

/// Equality up to the `q̂ / −q̂` double cover.
pub fn same_pose(a: &DualQuaternion, b: &DualQuaternion, tol: f64) -> bool {
    let (ca, cb) = (a.canonical(), b.canonical());
    ca.to_array().iter().zip(cb.to_array()).all(|(x, y)| (x - y).abs() <= tol)
}

//! Poses and the three pose-distance metrics compared in the handover reward.
//!
//! Euler angles use the extrinsic fixed-axis XYZ convention: the rotation is
//! `R = Rz(yaw) · Ry(pitch) · Rx(roll)`, and triples are reported as
//! `(roll, pitch, yaw)` with every component wrapped to `(−π, π]` and pitch in
//! `[−π/2, π/2]`. The Euler metric depends on this choice.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::quat::{dq_distance, dq_rotation_distance, DualQuaternion, Quaternion};

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

pub fn wrap_euler(e: &Vector3<f64>) -> Vector3<f64> {
    e.map(wrap_angle)
}

pub fn quat_to_matrix(q: &Quaternion) -> Matrix3<f64> {
    let Quaternion { w, x, y, z } = *q;
    Matrix3::new(
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

/// Shepperd's method; the result has `w ≥ 0`.
pub fn matrix_to_quat(m: &Matrix3<f64>) -> Quaternion {
    let tr = m.trace();
    let q = if tr > m[(0, 0)] && tr > m[(1, 1)] && tr > m[(2, 2)] {
        let s = 2.0 * (1.0 + tr).sqrt();
        Quaternion::new(
            0.25 * s,
            (m[(2, 1)] - m[(1, 2)]) / s,
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(1, 0)] - m[(0, 1)]) / s,
        )
    } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
        let s = 2.0 * (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt();
        Quaternion::new(
            (m[(2, 1)] - m[(1, 2)]) / s,
            0.25 * s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
        )
    } else if m[(1, 1)] > m[(2, 2)] {
        let s = 2.0 * (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt();
        Quaternion::new(
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            0.25 * s,
            (m[(1, 2)] + m[(2, 1)]) / s,
        )
    } else {
        let s = 2.0 * (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt();
        Quaternion::new(
            (m[(1, 0)] - m[(0, 1)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
            (m[(1, 2)] + m[(2, 1)]) / s,
            0.25 * s,
        )
    };
    let q = q.normalized();
    if q.w < 0.0 {
        -q
    } else {
        q
    }
}

/// `(roll, pitch, yaw)` → quaternion of `Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn euler_to_quat(e: &Vector3<f64>) -> Quaternion {
    let x = Vector3::x();
    let y = Vector3::y();
    let z = Vector3::z();
    Quaternion::from_axis_angle(&z, e.z)
        * Quaternion::from_axis_angle(&y, e.y)
        * Quaternion::from_axis_angle(&x, e.x)
}

pub fn matrix_to_euler(m: &Matrix3<f64>) -> Vector3<f64> {
    let cos_pitch = m[(0, 0)].hypot(m[(1, 0)]);
    let sin_pitch = -m[(2, 0)];
    let pitch = sin_pitch.atan2(cos_pitch);
    let yaw = if cos_pitch < 1e-12 { 0.0 } else { m[(1, 0)].atan2(m[(0, 0)]) };
    // Near the poles roll and yaw are individually ill-conditioned but roll ∓ yaw
    // is not; taking roll from that combination keeps the rotation itself exact.
    let roll = if sin_pitch > 0.7 {
        (m[(0, 1)] - m[(1, 2)]).atan2(m[(0, 2)] + m[(1, 1)]) + yaw
    } else if sin_pitch < -0.7 {
        (-(m[(0, 1)] + m[(1, 2)])).atan2(m[(1, 1)] - m[(0, 2)]) - yaw
    } else {
        m[(2, 1)].atan2(m[(2, 2)])
    };
    wrap_euler(&Vector3::new(roll, pitch, yaw))
}

pub fn quat_to_euler(q: &Quaternion) -> Vector3<f64> {
    matrix_to_euler(&quat_to_matrix(q))
}

/// A rigid pose: world translation in meters plus a unit rotation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub translation: Vector3<f64>,
    pub rotation: Quaternion,
}

/// The three interchangeable views of a pose's rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationViews {
    pub quaternion: Quaternion,
    pub euler_xyz: Vector3<f64>,
    pub matrix: Matrix3<f64>,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        translation: Vector3::new(0.0, 0.0, 0.0),
        rotation: Quaternion::IDENTITY,
    };

    /// Normalizes `rotation`.
    pub fn new(translation: Vector3<f64>, rotation: Quaternion) -> Self {
        Self { translation, rotation: rotation.normalized() }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(translation, Quaternion::IDENTITY)
    }

    pub fn from_euler(translation: Vector3<f64>, euler_xyz: Vector3<f64>) -> Self {
        Self::new(translation, euler_to_quat(&euler_xyz))
    }

    pub fn from_matrix(translation: Vector3<f64>, matrix: &Matrix3<f64>) -> Self {
        Self::new(translation, matrix_to_quat(matrix))
    }

    pub fn euler_xyz(&self) -> Vector3<f64> {
        quat_to_euler(&self.rotation)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        quat_to_matrix(&self.rotation)
    }

    pub fn convert(&self) -> RotationViews {
        convert(self)
    }

    pub fn dual_quaternion(&self) -> DualQuaternion {
        let q = self.rotation.normalized();
        let dual = (Quaternion::pure(&self.translation) * q).scale(0.5);
        DualQuaternion::new(q, dual).canonical()
    }

    /// `self ∘ other`: `other` is expressed in this pose's frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.translation + self.rotation.rotate(&other.translation),
            (self.rotation * other.rotation).normalized(),
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.conj();
        Pose::new(-inv.rotate(&self.translation), inv)
    }

    /// Maps a point from this pose's local frame to the world.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.translation + self.rotation.rotate(p)
    }

    /// Maps a world point into this pose's local frame.
    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.conj().rotate(&(p - self.translation))
    }
}

pub fn convert(p: &Pose) -> RotationViews {
    RotationViews { quaternion: p.rotation, euler_xyz: p.euler_xyz(), matrix: p.matrix() }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("metric weight {name} must be strictly positive and finite, got {value}")]
pub struct WeightError {
    pub name: &'static str,
    pub value: f64,
}

/// Scales that bring translation and rotation terms to comparable magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricWeights {
    /// Translation scale ψ.
    pub psi: f64,
    /// Euler rotation scale μ.
    pub mu: f64,
    /// Matrix rotation scale β.
    pub beta: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self { psi: 2.1, mu: 0.32, beta: 0.32 }
    }
}

impl MetricWeights {
    pub fn new(psi: f64, mu: f64, beta: f64) -> Result<Self, WeightError> {
        let w = Self { psi, mu, beta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        for (name, value) in [("psi", self.psi), ("mu", self.mu), ("beta", self.beta)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(WeightError { name, value });
            }
        }
        Ok(())
    }
}

/// `ψ‖t₁ − t₂‖₂ + μ‖wrap(e₁ − e₂)‖₂`.
pub fn euler_distance(p1: &Pose, p2: &Pose, w: &MetricWeights) -> f64 {
    let (t, r) = euler_terms(p1, p2, w);
    t + r
}

fn euler_terms(p1: &Pose, p2: &Pose, w: &MetricWeights) -> (f64, f64) {
    let de = wrap_euler(&(p1.euler_xyz() - p2.euler_xyz()));
    (w.psi * (p1.translation - p2.translation).norm(), w.mu * de.norm())
}

/// Relative rotation angle `acos((tr(R₁ᵀR₂) − 1)/2)` in `[0, π]`.
///
/// Evaluated as `atan2(sin θ, cos θ)` with `sin θ` taken from the skew part of
/// `R₁ᵀR₂`; `acos` alone loses half the digits near 0 and π.
pub fn matrix_angle(p1: &Pose, p2: &Pose) -> f64 {
    let r = p1.matrix().transpose() * p2.matrix();
    let cos = (r.trace() - 1.0) / 2.0;
    let skew = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    (0.5 * skew.norm()).atan2(cos)
}

/// `ψ‖t₁ − t₂‖₂ + β θ_diff`.
pub fn matrix_distance(p1: &Pose, p2: &Pose, w: &MetricWeights) -> f64 {
    w.psi * (p1.translation - p2.translation).norm() + w.beta * matrix_angle(p1, p2)
}

pub fn dq_pose_distance(p1: &Pose, p2: &Pose) -> f64 {
    dq_distance(&p1.dual_quaternion(), &p2.dual_quaternion())
        .expect("pose rotations are normalized")
}

pub fn dq_pose_rotation_distance(p1: &Pose, p2: &Pose) -> f64 {
    dq_rotation_distance(&p1.dual_quaternion(), &p2.dual_quaternion())
        .expect("pose rotations are normalized")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    DualQuaternion,
    Euler,
    Matrix,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::DualQuaternion, MetricKind::Euler, MetricKind::Matrix];

    pub fn label(self) -> &'static str {
        match self {
            MetricKind::DualQuaternion => "dq",
            MetricKind::Euler => "euler",
            MetricKind::Matrix => "matrix",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MetricKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dq" => Ok(MetricKind::DualQuaternion),
            "euler" => Ok(MetricKind::Euler),
            "matrix" => Ok(MetricKind::Matrix),
            other => Err(format!("unknown metric '{other}' (expected dq, euler or matrix)")),
        }
    }
}

/// A distance split into its global value and translation / rotation terms.
///
/// For `dq` the terms are the Euclidean translation distance and the rotation
/// term of the dual-quaternion difference; for `euler` and `matrix` they are
/// the two weighted summands of the metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBreakdown {
    pub global: f64,
    pub translation: f64,
    pub rotation: f64,
}

/// A configured pose distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub kind: MetricKind,
    pub weights: MetricWeights,
}

impl Metric {
    pub fn new(kind: MetricKind, weights: MetricWeights) -> Self {
        Self { kind, weights }
    }

    pub fn dq() -> Self {
        Self::new(MetricKind::DualQuaternion, MetricWeights::default())
    }

    pub fn euler() -> Self {
        Self::new(MetricKind::Euler, MetricWeights::default())
    }

    pub fn matrix() -> Self {
        Self::new(MetricKind::Matrix, MetricWeights::default())
    }

    pub fn distance(&self, a: &Pose, b: &Pose) -> f64 {
        match self.kind {
            MetricKind::DualQuaternion => dq_pose_distance(a, b),
            MetricKind::Euler => euler_distance(a, b, &self.weights),
            MetricKind::Matrix => matrix_distance(a, b, &self.weights),
        }
    }

    /// Translation-only variant used when rotations should not enter a comparison.
    pub fn translation_distance(&self, a: &Pose, b: &Pose) -> f64 {
        let d = (a.translation - b.translation).norm();
        match self.kind {
            MetricKind::DualQuaternion => 0.5 * d,
            MetricKind::Euler | MetricKind::Matrix => self.weights.psi * d,
        }
    }

    pub fn breakdown(&self, a: &Pose, b: &Pose) -> DistanceBreakdown {
        match self.kind {
            MetricKind::DualQuaternion => DistanceBreakdown {
                global: dq_pose_distance(a, b),
                translation: (a.translation - b.translation).norm(),
                rotation: dq_pose_rotation_distance(a, b),
            },
            MetricKind::Euler => {
                let (t, r) = euler_terms(a, b, &self.weights);
                DistanceBreakdown { global: t + r, translation: t, rotation: r }
            }
            MetricKind::Matrix => {
                let t = self.weights.psi * (a.translation - b.translation).norm();
                let r = self.weights.beta * matrix_angle(a, b);
                DistanceBreakdown { global: t + r, translation: t, rotation: r }
            }
        }
    }
}

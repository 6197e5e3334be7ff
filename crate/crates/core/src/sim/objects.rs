//! Handover objects and the geometric contact proxy.
//!
//! Every object is an elongated body whose long axis is its local `z`. The
//! receiver's grasp frame sits on the object's `−x` face with the palm normal
//! (palm `+z`) pointing into the object and the palm `x` axis along the long
//! axis; the giver holds the opposite face further down the axis.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};

use crate::metrics::Pose;
use crate::reward::{sensor_index, ContactState, Finger, Phalanx, CONTACT_COUNT, PALM};

/// Grasp frame position along the long axis, meters from the object center.
pub const GRASP_AXIAL_OFFSET: f64 = 0.08;
/// Giver grip position along the long axis.
pub const GIVER_AXIAL_OFFSET: f64 = -0.12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Full extents along local x, y, z.
    Prism { x: f64, y: f64, z: f64 },
    /// Axis along local z.
    Cylinder { radius: f64, length: f64 },
}

impl Shape {
    /// Distance from a point in the object frame to the solid; 0 inside.
    pub fn surface_distance(&self, p: &Vector3<f64>) -> f64 {
        match *self {
            Shape::Prism { x, y, z } => {
                let q = p.abs() - Vector3::new(x, y, z) * 0.5;
                q.map(|c| c.max(0.0)).norm()
            }
            Shape::Cylinder { radius, length } => {
                let radial = (p.x.hypot(p.y) - radius).max(0.0);
                let axial = (p.z.abs() - 0.5 * length).max(0.0);
                radial.hypot(axial)
            }
        }
    }

    /// Half thickness across the grasped face (local x).
    pub fn half_width(&self) -> f64 {
        match *self {
            Shape::Prism { x, .. } => 0.5 * x,
            Shape::Cylinder { radius, .. } => radius,
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Shape::Prism { z, .. } => z,
            Shape::Cylinder { length, .. } => length,
        }
    }

    fn is_valid(&self) -> bool {
        let dims: &[f64] = match self {
            Shape::Prism { x, y, z } => &[*x, *y, *z],
            Shape::Cylinder { radius, length } => &[*radius, *length],
        };
        dims.iter().all(|d| *d > 0.0 && d.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    Prism,
    ShortPrism,
    Cylinder,
    ShortCylinder,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 4] =
        [ObjectKind::Prism, ObjectKind::ShortPrism, ObjectKind::Cylinder, ObjectKind::ShortCylinder];

    pub fn label(self) -> &'static str {
        match self {
            ObjectKind::Prism => "prism",
            ObjectKind::ShortPrism => "short_prism",
            ObjectKind::Cylinder => "cylinder",
            ObjectKind::ShortCylinder => "short_cylinder",
        }
    }

    pub fn spec(self) -> ObjectSpec {
        let shape = match self {
            ObjectKind::Prism => Shape::Prism { x: 0.035, y: 0.035, z: 0.45 },
            ObjectKind::ShortPrism => Shape::Prism { x: 0.035, y: 0.035, z: 0.35 },
            ObjectKind::Cylinder => Shape::Cylinder { radius: 0.019, length: 0.45 },
            ObjectKind::ShortCylinder => Shape::Cylinder { radius: 0.019, length: 0.35 },
        };
        ObjectSpec::new(self.label(), shape)
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ObjectKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectKind::ALL.into_iter().find(|k| k.label() == s).ok_or_else(|| {
            format!("unknown object '{s}' (expected prism, short_prism, cylinder or short_cylinder)")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectSpec {
    pub name: &'static str,
    pub shape: Shape,
    /// Receiver grasp frame relative to the object center.
    pub grasp_frame_offset: Pose,
    /// Giver palm relative to the object center.
    pub giver_offset: Pose,
}

impl ObjectSpec {
    pub fn new(name: &'static str, shape: Shape) -> Self {
        let hw = shape.half_width();
        // palm x → object z, palm y → −object y, palm z → object x
        let grasp_rot = Matrix3::new(0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0);
        // giver palm faces the object from the +x side
        let giver_rot = Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        Self {
            name,
            shape,
            grasp_frame_offset: Pose::from_matrix(Vector3::new(-hw, 0.0, GRASP_AXIAL_OFFSET), &grasp_rot),
            giver_offset: Pose::from_matrix(Vector3::new(hw, 0.0, GIVER_AXIAL_OFFSET), &giver_rot),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.shape.is_valid()
    }

    /// Object center pose given the world pose of its grasp frame.
    pub fn center_from_grasp(&self, grasp: &Pose) -> Pose {
        grasp.compose(&self.grasp_frame_offset.inverse())
    }

    /// Giver palm pose given the world pose of the grasp frame.
    pub fn giver_from_grasp(&self, grasp: &Pose) -> Pose {
        self.center_from_grasp(grasp).compose(&self.giver_offset)
    }

    pub fn distance_to_point(&self, grasp: &Pose, world: &Vector3<f64>) -> f64 {
        let center = self.center_from_grasp(grasp);
        self.shape.surface_distance(&center.inverse_transform_point(world))
    }
}

/// Tuning of the proximity contact proxy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactProxyConfig {
    /// A sensor can fire when its anchor is within this distance of the object, meters.
    pub epsilon: f64,
    /// Joint closure, radians, that proximal / medial / distal sensors need.
    pub joint_thresholds: [f64; 3],
}

impl Default for ContactProxyConfig {
    fn default() -> Self {
        Self { epsilon: 0.01, joint_thresholds: [0.3, 0.6, 0.9] }
    }
}

/// Sensor anchor points in the palm frame, indexed like [`ContactState::flags`].
///
/// Fingers extend along palm `+y` (the thumb along `−y`) and curl toward the
/// palm normal `+z`; anchors mark where each phalanx rests once curled.
pub fn sensor_anchors() -> [Vector3<f64>; CONTACT_COUNT] {
    let mut anchors = [Vector3::zeros(); CONTACT_COUNT];
    for finger in Finger::ALL {
        let (x, side) = match finger {
            Finger::Index => (-0.035, 1.0),
            Finger::Middle => (0.0, 1.0),
            Finger::Ring => (0.035, 1.0),
            Finger::Thumb => (0.0, -1.0),
        };
        for (phalanx, (y, z)) in Phalanx::ALL.into_iter().zip([(0.025, 0.010), (0.030, 0.045), (0.012, 0.075)]) {
            anchors[sensor_index(finger, phalanx)] = Vector3::new(x, side * y, z);
        }
    }
    anchors
}

/// Fires a sensor when its anchor is within `epsilon` of the object and, for
/// finger sensors, when the matching joint closure exceeds its threshold.
pub fn contact_proxy(
    palm: &Pose,
    joints: &[f64; 3],
    object: &ObjectSpec,
    object_grasp: &Pose,
    cfg: &ContactProxyConfig,
) -> ContactState {
    let center = object.center_from_grasp(object_grasp);
    let mut contacts = ContactState::none();
    for (i, anchor) in sensor_anchors().iter().enumerate() {
        let local = center.inverse_transform_point(&palm.transform_point(anchor));
        let near = object.shape.surface_distance(&local) <= cfg.epsilon;
        let closed = if i == PALM {
            true
        } else {
            let level = (i - 1) % 3;
            joints[level] > cfg.joint_thresholds[level]
        };
        contacts.set(i, near && closed);
    }
    contacts
}

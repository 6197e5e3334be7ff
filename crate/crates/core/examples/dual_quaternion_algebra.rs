//! Build poses as unit dual quaternions, compose them and measure how far apart they are.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;

use dq_handover::quat::{dq_conj, dq_distance, dq_from_pose, dq_mul, dq_rotation_distance, dq_to_pose, Quaternion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let quarter_turn = Quaternion::from_axis_angle(&Vector3::z(), FRAC_PI_2);
    let a = dq_from_pose(&quarter_turn, &Vector3::new(0.2, 0.0, 0.0))?;
    let b = dq_from_pose(&Quaternion::IDENTITY, &Vector3::new(0.0, 0.1, 0.0))?;

    let ab = dq_mul(&a, &b);
    let (q, t) = dq_to_pose(&ab)?;
    println!("a*b rotation  {:?}", q.to_array());
    println!("a*b translation {:.4} {:.4} {:.4}", t.x, t.y, t.z);

    let back = dq_mul(&ab, &dq_conj(&b));
    println!("(a*b)*b^-1 == a: {:.2e}", dq_distance(&back, &a)?);

    println!("d(a, b)     = {:.6}", dq_distance(&a, &b)?);
    println!("d_rot(a, b) = {:.6}  (2 sin(pi/8) = {:.6})", dq_rotation_distance(&a, &b)?, 2.0 * (FRAC_PI_2 / 4.0).sin());
    Ok(())
}

//! Compare the three pose metrics near gimbal lock, where Euler angles jump charts.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;

use dq_handover::metrics::{Metric, Pose};

fn main() {
    let metrics = [Metric::dq(), Metric::euler(), Metric::matrix()];
    println!("{:>10} {:>12} {:>12} {:>12}", "delta", "dq", "euler", "matrix");
    for delta in [1e-1, 1e-2, 1e-3, 1e-4] {
        let a = Pose::from_euler(Vector3::zeros(), Vector3::new(0.0, FRAC_PI_2 - delta, 0.0));
        let b = Pose::from_euler(Vector3::zeros(), Vector3::new(0.0, FRAC_PI_2 + delta, 0.0));
        let d: Vec<f64> = metrics.iter().map(|m| m.distance(&a, &b)).collect();
        println!("{delta:>10.0e} {:>12.6} {:>12.6} {:>12.6}", d[0], d[1], d[2]);
    }

    let a = Pose::from_euler(Vector3::new(0.1, 0.0, 0.0), Vector3::new(0.3, -0.2, 0.5));
    let b = Pose::from_euler(Vector3::new(0.0, 0.05, 0.0), Vector3::new(0.1, 0.1, 0.4));
    for m in &metrics {
        let br = m.breakdown(&a, &b);
        println!("{:>6}: global {:.5} trans {:.5} rot {:.5}", m.kind.label(), br.global, br.translation, br.rotation);
    }
}

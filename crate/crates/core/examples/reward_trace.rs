//! Walk the phased reward through a scripted handover: approach, touch, grasp, carry home.

use dq_handover::metrics::Pose;
use dq_handover::reward::{total_reward, ContactState, Finger, FrameSet, Phalanx, PhaseState, RewardConfig, sensor_index, PALM};
use dq_handover::sim::{back_offset, SimConfig};

fn main() {
    let sim = SimConfig::default();
    let cfg = RewardConfig::default();
    let home = sim.home_pose();
    let grasp = sim.nominal_grasp_pose();
    let giver = sim.object.giver_from_grasp(&grasp);

    let grip = ContactState::with(&[
        PALM,
        sensor_index(Finger::Thumb, Phalanx::Proximal),
        sensor_index(Finger::Index, Phalanx::Proximal),
        sensor_index(Finger::Middle, Phalanx::Medial),
    ]);
    let touch = ContactState::with(&[sensor_index(Finger::Index, Phalanx::Distal)]);

    let mut state = PhaseState::default();
    let mut ret = 0.0;
    let steps = 12;
    for k in 0..=steps {
        let s = k as f64 / steps as f64;
        // reach out for the first half, carry back for the second
        let (palm, object, contacts) = if s <= 0.5 {
            let p = home.translation.lerp(&grasp.translation, 2.0 * s);
            let c = if s > 0.4 { touch } else { ContactState::none() };
            (Pose::new(p, grasp.rotation), grasp, c)
        } else {
            let p = grasp.translation.lerp(&home.translation, 2.0 * (s - 0.5));
            let pose = Pose::new(p, grasp.rotation);
            (pose, pose, grip)
        };
        let frames = FrameSet { hand_palm: palm, hand_back: palm.compose(&back_offset()), giver_palm: giver, object_grasp: object, home };
        let step = total_reward(&frames, &contacts, &state, &cfg);
        state = step.state;
        ret += step.reward;
        let t = step.terms;
        println!(
            "{k:>2} {:<12} d_t {:.4} d_tgt {:.4} m_t {:>2} bonus {:>4} r {:>8.4}",
            t.phase.label(),
            t.d_t,
            t.d_tgt,
            t.m_t,
            t.bonus,
            step.reward
        );
    }
    println!("undiscounted return {ret:.3}");
}

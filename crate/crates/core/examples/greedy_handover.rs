//! Run the metric-descent controller for one episode and print its progress.

use dq_handover::controllers::{greedy_step, ControllerConfig};
use dq_handover::sim::{reset, step, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SimConfig::default();
    let ctrl = ControllerConfig::default();
    let mut s = reset(&cfg, 7);
    loop {
        let a = greedy_step(&s, &ctrl)?;
        let t = step(&mut s, &a, &cfg)?;
        if s.step_index.is_multiple_of(10) || t.done {
            println!(
                "step {:>3} {:<12} d_t {:.4} d_tgt {:.4} holding {} r {:.3}",
                s.step_index,
                t.terms.phase.label(),
                t.terms.d_t,
                t.terms.d_tgt,
                s.holding,
                t.reward
            );
        }
        if t.done {
            println!("outcome: {}", t.outcome.label());
            return Ok(());
        }
    }
}

//! Success rates of the greedy controller per metric, object and giver motion.

use dq_handover::controllers::{rollout, ControllerConfig, Greedy, RolloutSummary};
use dq_handover::metrics::Metric;
use dq_handover::reward::RewardConfig;
use dq_handover::sim::{ObjectKind, Perturbation, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: Vec<u64> = (0..50).collect();
    println!("{:<7} {:<15} {:<5} {:>6} {:>6} {:>8}", "metric", "object", "giver", "succ%", "fail%", "timeout%");
    for metric in [Metric::dq(), Metric::euler(), Metric::matrix()] {
        for object in ObjectKind::ALL {
            for perturbation in [Perturbation::Off, Perturbation::moving()] {
                let cfg = SimConfig { object: object.spec(), perturbation, reward: RewardConfig::with_metric(metric), ..Default::default() };
                let ctrl = Greedy(ControllerConfig { metric, ..Default::default() });
                let s = RolloutSummary::from_logs(&rollout(&ctrl, &cfg, &seeds)?, cfg.reward.gamma);
                println!(
                    "{:<7} {:<15} {:<5} {:>6.1} {:>6.1} {:>8.1}",
                    metric.kind.label(),
                    object.label(),
                    if perturbation.is_on() { "on" } else { "off" },
                    s.success_pct(),
                    s.fail_pct(),
                    s.timeout_pct()
                );
            }
        }
    }
    Ok(())
}

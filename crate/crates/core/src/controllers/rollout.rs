//! Seeded episode rollouts and their aggregate statistics.

use rayon::prelude::*;

use super::Controller;
use crate::reward::discounted_return;
use crate::sim::{objective_distances, observe, reset, step, EpisodeLog, Outcome, SimConfig, SimError};

/// Runs one episode to termination.
pub fn run_episode<C: Controller + ?Sized>(ctrl: &C, cfg: &SimConfig, seed: u64) -> Result<EpisodeLog, SimError> {
    let mut s = reset(cfg, seed);
    let mut log = EpisodeLog::new(seed);
    log.initial = Some(objective_distances(&s, &cfg.reward.metric));
    let mut obs = observe(&mut s, cfg);
    while !s.is_terminal() {
        let a = ctrl.act(&s, &obs)?;
        let t = step(&mut s, &a, cfg)?;
        log.steps.push(t.record);
        obs = t.observation;
    }
    Ok(log)
}

/// One independent episode per seed, in seed order. Episodes run in parallel.
pub fn rollout<C: Controller + ?Sized>(ctrl: &C, cfg: &SimConfig, seeds: &[u64]) -> Result<Vec<EpisodeLog>, SimError> {
    seeds.par_iter().map(|&seed| run_episode(ctrl, cfg, seed)).collect()
}

/// 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96_f64;
    let n = n as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutSummary {
    pub episodes: usize,
    pub success: usize,
    pub fail: usize,
    pub timeout: usize,
    pub mean_return: f64,
    pub mean_initial_d_trans: f64,
    pub mean_initial_d_rot: f64,
    pub mean_final_d_trans: f64,
    pub mean_final_d_rot: f64,
    pub success_interval: (f64, f64),
}

impl RolloutSummary {
    pub fn from_logs(logs: &[EpisodeLog], gamma: f64) -> Self {
        let n = logs.len();
        let count = |o: Outcome| logs.iter().filter(|l| l.outcome() == o).count();
        let mean = |f: &dyn Fn(&EpisodeLog) -> f64| {
            if n == 0 {
                0.0
            } else {
                logs.iter().map(f).sum::<f64>() / n as f64
            }
        };
        let success = count(Outcome::Success);
        Self {
            episodes: n,
            success,
            fail: count(Outcome::Fail),
            timeout: count(Outcome::Timeout),
            mean_return: mean(&|l| discounted_return(&l.rewards(), gamma)),
            mean_initial_d_trans: mean(&|l| l.initial.map_or(0.0, |d| d.translation)),
            mean_initial_d_rot: mean(&|l| l.initial.map_or(0.0, |d| d.rotation)),
            mean_final_d_trans: mean(&|l| l.steps.last().map_or(0.0, |s| s.d_trans)),
            mean_final_d_rot: mean(&|l| l.steps.last().map_or(0.0, |s| s.d_rot)),
            success_interval: wilson_interval(success, n),
        }
    }

    fn pct(&self, k: usize) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            100.0 * k as f64 / self.episodes as f64
        }
    }

    pub fn success_pct(&self) -> f64 {
        self.pct(self.success)
    }

    pub fn fail_pct(&self) -> f64 {
        self.pct(self.fail)
    }

    pub fn timeout_pct(&self) -> f64 {
        self.pct(self.timeout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::{ControllerConfig, Greedy, LinearPolicy};

    #[test]
    fn empty_seed_list() {
        let logs = rollout(&Greedy(ControllerConfig::default()), &SimConfig::default(), &[]).unwrap();
        assert!(logs.is_empty());
        let s = RolloutSummary::from_logs(&logs, 0.99);
        assert_eq!((s.episodes, s.success, s.mean_return), (0, 0, 0.0));
    }

    #[test]
    fn rollouts_are_reproducible() {
        let cfg = SimConfig { max_steps: 60, ..Default::default() };
        let g = Greedy(ControllerConfig::default());
        let a = rollout(&g, &cfg, &[1, 2, 3]).unwrap();
        let b = rollout(&g, &cfg, &[1, 2, 3]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|l| l.seed).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn zero_policy_times_out() {
        let cfg = SimConfig { max_steps: 20, ..Default::default() };
        let log = run_episode(&LinearPolicy::zeros(), &cfg, 4).unwrap();
        assert_eq!(log.len(), 20);
        assert_eq!(log.outcome(), Outcome::Timeout);
    }

    #[test]
    fn wilson_reference_values() {
        // 90/100: p̂ = 0.9, interval ≈ [0.8256, 0.9448]
        let (lo, hi) = wilson_interval(90, 100);
        assert!((lo - 0.82564).abs() < 1e-4 && (hi - 0.94478).abs() < 1e-4, "{lo} {hi}");
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
        let (lo, hi) = wilson_interval(10, 10);
        assert!(hi == 1.0 && lo > 0.69);
    }
}

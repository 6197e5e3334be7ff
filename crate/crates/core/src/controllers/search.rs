//! Best-of-population random search over [`LinearPolicy`] parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::policy::LinearPolicy;
use super::rollout::run_episode;
use crate::reward::discounted_return;
use crate::sim::{SimConfig, SimError, ACTION_DIM, OBS_DIM};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub iterations: usize,
    pub population: usize,
    /// Standard deviation of the Gaussian parameter perturbations.
    pub noise_scale: f64,
    /// Episodes used to score every candidate; fixed for the whole search.
    pub seeds: Vec<u64>,
    /// Seed of the perturbation generator.
    pub rng_seed: u64,
    /// Parameters that may change, in [`LinearPolicy::params`] order; `None` means all.
    pub mask: Option<Vec<bool>>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            population: 32,
            noise_scale: 0.05,
            seeds: (0..8).collect(),
            rng_seed: 0,
            mask: None,
        }
    }
}

impl SearchConfig {
    /// Mask that trains only the translation rows (weights and biases).
    pub fn translation_mask() -> Vec<bool> {
        let mut mask = vec![false; ACTION_DIM * OBS_DIM + ACTION_DIM];
        for r in 0..3 {
            mask[r * OBS_DIM..(r + 1) * OBS_DIM].fill(true);
            mask[ACTION_DIM * OBS_DIM + r] = true;
        }
        mask
    }
}

/// Translation-only variant of `base`: no rotation randomization and a
/// shorter horizon.
pub fn translation_subtask(base: &SimConfig) -> SimConfig {
    SimConfig { reset_rot_roll_yaw: 0.0, reset_rot_pitch: 0.0, max_steps: 100, ..*base }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub incumbent_score: f64,
    pub best_candidate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub policy: LinearPolicy,
    pub init_score: f64,
    pub history: Vec<IterationRecord>,
}

impl SearchResult {
    pub fn final_score(&self) -> f64 {
        self.history.last().map_or(self.init_score, |h| h.incumbent_score)
    }
}

/// Mean discounted return of `policy` over `seeds`.
pub fn score(policy: &LinearPolicy, cfg: &SimConfig, seeds: &[u64]) -> Result<f64, SimError> {
    if seeds.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &seed in seeds {
        let log = run_episode(policy, cfg, seed)?;
        total += discounted_return(&log.rewards(), cfg.reward.gamma);
    }
    Ok(total / seeds.len() as f64)
}

/// Iterated best-of-population search. The incumbent is replaced only by a
/// strictly better candidate, so its score never decreases.
pub fn random_search(init: &LinearPolicy, search: &SearchConfig, cfg: &SimConfig) -> Result<SearchResult, SimError> {
    let (rows, cols) = init.weights.shape();
    let mut incumbent = init.params();
    let mut incumbent_score = score(init, cfg, &search.seeds)?;
    let init_score = incumbent_score;
    let mut rng = ChaCha8Rng::seed_from_u64(search.rng_seed);
    let mut history = Vec::with_capacity(search.iterations);

    for iteration in 1..=search.iterations {
        let candidates: Vec<Vec<f64>> = (0..search.population)
            .map(|_| {
                incumbent
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| {
                        let free = search.mask.as_ref().is_none_or(|m| m[i]);
                        if free {
                            let n: f64 = StandardNormal.sample(&mut rng);
                            p + search.noise_scale * n
                        } else {
                            p
                        }
                    })
                    .collect()
            })
            .collect();
        let scores = candidates
            .par_iter()
            .map(|p| score(&LinearPolicy::from_params(rows, cols, p), cfg, &search.seeds))
            .collect::<Result<Vec<f64>, _>>()?;

        let (best, best_score) = scores
            .iter()
            .enumerate()
            .fold((None, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (Some(i), s) } else { acc });
        if let Some(i) = best {
            if best_score > incumbent_score {
                incumbent = candidates[i].clone();
                incumbent_score = best_score;
            }
        }
        history.push(IterationRecord { iteration, incumbent_score, best_candidate: best_score });
    }

    Ok(SearchResult { policy: LinearPolicy::from_params(rows, cols, &incumbent), init_score, history })
}

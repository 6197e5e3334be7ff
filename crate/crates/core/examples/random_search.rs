//! Improve a linear policy on the translation-only reach task by random search.

use dq_handover::controllers::{random_search, LinearPolicy, SearchConfig};
use dq_handover::controllers::search::translation_subtask;
use dq_handover::sim::SimConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = translation_subtask(&SimConfig::default());
    let search = SearchConfig {
        iterations: 30,
        population: 16,
        noise_scale: 0.01,
        seeds: (0..6).collect(),
        rng_seed: 1,
        mask: Some(SearchConfig::translation_mask()),
    };
    let result = random_search(&LinearPolicy::zeros(), &search, &sim)?;
    println!("iteration 0: {:.3}", result.init_score);
    for h in result.history.iter().filter(|h| h.iteration % 5 == 0) {
        println!("iteration {}: {:.3} (best candidate {:.3})", h.iteration, h.incumbent_score, h.best_candidate);
    }
    println!("final {:.3}", result.final_score());
    print!("{}", result.policy.to_text());
    Ok(())
}

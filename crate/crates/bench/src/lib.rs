//! Seeded workloads for the benchmarks.

use pyramid_core::pyramid::{build_rwd_instance, tcwd};
use pyramid_core::{RwdInstance, ScenarioConfig, Simulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A region instance over `size` virtual nodes and `slots` slots, with
/// roughly four in five virtual nodes populated.
pub fn random_instance(size: usize, slots: usize, sub_degree: usize, seed: u64) -> RwdInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: Vec<u32> = (0..size)
        .map(|_| {
            if rng.gen_bool(0.8) {
                rng.gen_range(1..6)
            } else {
                0
            }
        })
        .collect();
    for c in counts.iter_mut().take(sub_degree) {
        *c = (*c).max(1);
    }
    let ut: Vec<Vec<f64>> = counts
        .iter()
        .map(|&c| {
            (0..slots)
                .map(|_| if c == 0 { 0.0 } else { rng.gen() })
                .collect()
        })
        .collect();
    let w = tcwd(&ut, &counts);
    build_rwd_instance(&ut, &counts, &w, sub_degree, size).expect("valid instance")
}

/// A simulation of `n` nodes that has finished its learning phase.
pub fn learned_simulation(n: usize, seed: u64) -> Simulation {
    let cfg = ScenarioConfig {
        n,
        horizon_hours: 216,
        ..ScenarioConfig::desk()
    };
    let mut sim = Simulation::new(&cfg, seed).expect("valid scenario");
    sim.learn();
    sim
}

/// A small end-to-end scenario configuration.
pub fn small_scenario(strategies: Vec<pyramid_core::Strategy>) -> ScenarioConfig {
    ScenarioConfig {
        n: 128,
        horizon_hours: 240,
        replication_degrees: vec![6],
        strategies,
        ..ScenarioConfig::desk()
    }
}

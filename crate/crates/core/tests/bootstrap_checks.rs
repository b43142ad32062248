//! Bootstrap contract checks on simulated data: determinism, execution
//! order independence, and planted-tau recovery at a small scale.

mod common;

use common::samples_from_sim;
use qmi_core::bootstrap::{
    bootstrap_tau, paired_difference, pool_replicates, run_replicate, BootstrapSpec,
    PipelineConfig,
};
use qmi_core::sim::{oracle_truth, simulate_with_truth, SyntheticLeague};
use qmi_core::transition::{AugmentationPolicy, GameSample};

fn planted_samples(games: u32, seed: u64) -> (Vec<GameSample>, PipelineConfig) {
    let league = SyntheticLeague { games, seed, ..Default::default() };
    let truth = oracle_truth(&league).unwrap();
    let sims = simulate_with_truth(&league, &truth).unwrap();
    let cfg =
        PipelineConfig { reward: league.reward, augmentation: AugmentationPolicy::default() };
    (samples_from_sim(&sims), cfg)
}

#[test]
fn identical_seeds_give_identical_posteriors() {
    let (samples, cfg) = planted_samples(250, 3);
    let spec = BootstrapSpec { replicates: 12, seed: 99 };
    let a = bootstrap_tau(&samples, &spec, &cfg).unwrap();
    let b = bootstrap_tau(&samples, &spec, &cfg).unwrap();
    assert_eq!(a, b);
    let c = bootstrap_tau(&samples, &BootstrapSpec { replicates: 12, seed: 100 }, &cfg).unwrap();
    assert_ne!(a, c);
}

#[test]
fn replicate_execution_order_cannot_matter() {
    let (samples, cfg) = planted_samples(200, 7);
    let spec = BootstrapSpec { replicates: 10, seed: 5 };
    let serial = bootstrap_tau(&samples, &spec, &cfg).unwrap();

    // Run the same replicates in reverse order into indexed slots.
    let mut results = vec![None; spec.replicates as usize];
    for b in (0..spec.replicates).rev() {
        results[b as usize] = run_replicate(&samples, &cfg, spec.seed, b).ok();
    }
    let pooled = pool_replicates(&results, &spec, Vec::new()).unwrap();
    assert_eq!(serial.regions[0].weights, pooled.regions[0].weights);
    assert_eq!(serial.regions[1].weights, pooled.regions[1].weights);
    assert_eq!(serial.regions[0].median, pooled.regions[0].median);
    assert_eq!(serial.regions[1].interval, pooled.regions[1].interval);
}

#[test]
fn planted_tau_recovery_small_scale() {
    let (samples, cfg) = planted_samples(900, 17);
    let spec = BootstrapSpec { replicates: 50, seed: 12 };
    let posterior = bootstrap_tau(&samples, &spec, &cfg).unwrap();
    assert_eq!(posterior.replicates_used, 50);
    let medians = (posterior.regions[0].median, posterior.regions[1].median);
    assert!(
        (medians.0 - 0.35).abs() <= 0.05,
        "opponent-half median {} too far from 0.35",
        medians.0
    );
    assert!(
        (medians.1 - 0.55).abs() <= 0.05,
        "own-half median {} too far from 0.55",
        medians.1
    );
    // Weight conservation per region.
    for region in &posterior.regions {
        let total: f64 = region.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    // Cross-region paired difference tracks tau*_1 - tau*_2 = -0.20.
    let diff = paired_difference(&posterior, 0, &posterior, 1);
    assert!(diff.paired);
    assert!(
        (diff.estimate - (-0.20)).abs() <= 0.08,
        "difference estimate {} too far from -0.20",
        diff.estimate
    );
    assert_eq!(
        diff.estimate.signum(),
        (posterior.regions[0].median - posterior.regions[1].median).signum()
    );
}

#[test]
fn single_replicate_bootstrap_works() {
    let (samples, cfg) = planted_samples(120, 23);
    let spec = BootstrapSpec { replicates: 1, seed: 4 };
    let posterior = bootstrap_tau(&samples, &spec, &cfg).unwrap();
    assert_eq!(posterior.replicates_used, 1);
    let sets = posterior.regions[0].replicate_sets[0].as_ref().unwrap();
    let total: f64 = posterior.regions[0].weights.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    for &gi in sets {
        assert!((posterior.regions[0].weights[gi] - 1.0 / sets.len() as f64).abs() < 1e-12);
    }
}

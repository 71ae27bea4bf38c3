//! Shared workloads for the criterion benches.

use reprank::{generate, GeneratorConfig, GroundTruth, QualityDistribution, RatingTable};

/// Synthetic table with uniform qualities.
pub fn uniform_workload(
    users: usize,
    objects: usize,
    density: f64,
    seed: u64,
) -> (GroundTruth, RatingTable) {
    let cfg = GeneratorConfig {
        num_users: users,
        num_objects: objects,
        density,
        quality: QualityDistribution::uniform(),
        seed,
        ..GeneratorConfig::default()
    };
    generate(&cfg).expect("valid generator config")
}

//! Shared fixture builders for the benchmark suites.

use lpfit_core::{
    generate_experiment, Experiment, NoiseModel, PenaltyFamily, ScenarioConfig, Transform,
    TransformGroup,
};

/// A mixed 1-D translation batch: `n` perfect pairs under offset 2.5 plus
/// `m` noise pairs, deterministic in `seed`.
pub fn translation_batch(n: usize, m: usize, seed: u64) -> Experiment {
    let cfg = ScenarioConfig {
        group: TransformGroup::Translation,
        dim: 1,
        n_ideal: n,
        m_noise: m,
        truth: Transform::translation(vec![2.5]).expect("valid offset"),
        noise: NoiseModel::UniformRadius { max: 10.0 },
        family: PenaltyFamily::Lp { p: 0.5 },
        master_seed: seed,
    };
    generate_experiment(&cfg).expect("valid scenario")
}

/// A planar rotation batch with majority noise.
pub fn rotation_batch(n: usize, m: usize, seed: u64) -> Experiment {
    let cfg = ScenarioConfig {
        group: TransformGroup::Rotation2D,
        dim: 2,
        n_ideal: n,
        m_noise: m,
        truth: Transform::rotation2d(1.2).expect("valid angle"),
        noise: NoiseModel::UniformRadius { max: 5.0 },
        family: PenaltyFamily::Lp { p: 0.5 },
        master_seed: seed,
    };
    generate_experiment(&cfg).expect("valid scenario")
}

//! Structural checks for the candidate-scan estimators: equivariance,
//! agreement with naive scans, and boundary behaviour at p = 1.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use lpfit_core::*;

fn random_translation_experiment(
    rng: &mut ChaCha8Rng,
    dim: usize,
    seed: u64,
) -> (Experiment, Transform) {
    let truth =
        Transform::translation((0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap();
    let cfg = ScenarioConfig {
        group: TransformGroup::Translation,
        dim,
        n_ideal: rng.gen_range(3..=6),
        m_noise: rng.gen_range(4..=9),
        truth: truth.clone(),
        noise: NoiseModel::UniformRadius { max: 6.0 },
        family: PenaltyFamily::Lp { p: 0.5 },
        master_seed: seed,
    };
    (generate_experiment(&cfg).unwrap(), truth)
}

/// Shifting every output by a constant shifts the estimated translation by
/// the same constant.
#[test]
fn translation_estimate_is_output_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE5_01);
    let family = PenaltyFamily::lp(0.4).unwrap();
    let config = EstimateConfig::default();
    for trial in 0..40u64 {
        let dim = 1 + (trial % 2) as usize;
        let (exp, _) = random_translation_experiment(&mut rng, dim, split_seed(0xE5_01, 0, trial));
        let shift: Vec<f64> = (0..dim).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let shifted_pairs: Vec<ObservationPair> = exp
            .pairs()
            .iter()
            .map(|pair| {
                let o: Vec<f64> =
                    pair.output.coords().iter().zip(&shift).map(|(x, s)| x + s).collect();
                ObservationPair::new(pair.input.clone(), Point::new(o).unwrap())
            })
            .collect();
        let shifted = Experiment::new(dim, dim, shifted_pairs).unwrap();

        let base = estimate(&exp, TransformGroup::Translation, &family, &config).unwrap();
        let moved = estimate(&shifted, TransformGroup::Translation, &family, &config).unwrap();
        let expected =
            Transform::translation(base.best.params().iter().zip(&shift).map(|(t, s)| t + s).collect())
                .unwrap();
        let err = moved.best.param_distance(&expected).unwrap();
        assert!(err <= 1e-9, "trial {trial}: equivariance broken by {err:.2e}");
    }
}

/// The estimator's winner matches a naive scan of the candidate list: no
/// candidate scores strictly better than the reported objective.
#[test]
fn estimate_agrees_with_naive_candidate_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE5_02);
    let config = EstimateConfig::default();
    for trial in 0..60u64 {
        let dim = 1 + (trial % 2) as usize;
        let (exp, _) = random_translation_experiment(&mut rng, dim, split_seed(0xE5_02, 0, trial));
        let family = PenaltyFamily::lp(rng.gen_range(0.1..1.0)).unwrap();
        let res = estimate(&exp, TransformGroup::Translation, &family, &config).unwrap();
        let best_by_scan = candidate_transforms(&exp, TransformGroup::Translation)
            .unwrap()
            .iter()
            .map(|t| objective_value(&exp, t, &family).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(
            (res.objective - best_by_scan).abs() <= 1e-12 * (1.0 + best_by_scan),
            "trial {trial}: reported {} vs scanned {}",
            res.objective,
            best_by_scan
        );
        let replayed = objective_value(&exp, &res.best, &family).unwrap();
        assert!((replayed - res.objective).abs() <= 1e-12 * (1.0 + replayed));
    }
}

/// At the p = 1 boundary the 1-D translation objective is piecewise linear,
/// so the minimizer is a data offset (a weighted median) and a dense grid
/// cannot improve on it.
#[test]
fn l1_boundary_matches_weighted_median_grid() {
    let pairs: Vec<ObservationPair> = [2.0, 2.0, 7.0, 9.0, 11.0]
        .iter()
        .map(|&o| ObservationPair::new(Point::new(vec![0.0]).unwrap(), Point::new(vec![o]).unwrap()))
        .collect();
    let exp = Experiment::new(1, 1, pairs).unwrap();
    let family = PenaltyFamily::lp(1.0).unwrap();
    let res =
        estimate(&exp, TransformGroup::Translation, &family, &EstimateConfig::default()).unwrap();
    assert_eq!(res.best.params(), &[7.0], "L1 minimizer must be the median offset");

    let mut grid_min = f64::INFINITY;
    let mut t = 1.0;
    while t <= 12.0 {
        let probe = Transform::translation(vec![t]).unwrap();
        grid_min = grid_min.min(objective_value(&exp, &probe, &family).unwrap());
        t += 1e-4;
    }
    assert!(res.objective <= grid_min + 1e-9);
}

/// Grid refinement may only improve the objective, never regress it.
#[test]
fn refinement_never_regresses() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE5_03);
    for trial in 0..20u64 {
        let truth =
            Transform::non_uniform_scaling(vec![rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0)])
                .unwrap();
        let cfg = ScenarioConfig {
            group: TransformGroup::NonUniformScaling,
            dim: 2,
            n_ideal: 4,
            m_noise: 7,
            truth,
            noise: NoiseModel::UniformRadius { max: 4.0 },
            family: PenaltyFamily::Lp { p: 0.5 },
            master_seed: split_seed(0xE5_03, 0, trial),
        };
        let exp = generate_experiment(&cfg)
            .unwrap()
            .sanitize(TransformGroup::NonUniformScaling)
            .unwrap();
        let family = PenaltyFamily::lp(0.5).unwrap();
        let bare = EstimateConfig { refine: RefinePolicy::Never, ..EstimateConfig::default() };
        let refined = EstimateConfig {
            refine: RefinePolicy::Always(RefineConfig::default()),
            ..EstimateConfig::default()
        };
        let b = estimate(&exp, TransformGroup::NonUniformScaling, &family, &bare).unwrap();
        let r = estimate(&exp, TransformGroup::NonUniformScaling, &family, &refined).unwrap();
        assert!(
            r.objective <= b.objective + 1e-15,
            "trial {trial}: refined {} above bare {}",
            r.objective,
            b.objective
        );
        assert!(r.refinement_steps > 0 && b.refinement_steps == 0);
    }
}

/// Annealing lands on the counting estimator's witness set: the final
/// estimate explains at least as many pairs as any single candidate.
#[test]
fn anneal_final_estimate_maximizes_consensus() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE5_04);
    let schedule = AnnealSchedule::default();
    let config = EstimateConfig::default();
    for trial in 0..30u64 {
        let truth = Transform::rotation2d(rng.gen_range(0.0..std::f64::consts::TAU)).unwrap();
        let cfg = ScenarioConfig {
            group: TransformGroup::Rotation2D,
            dim: 2,
            n_ideal: 6,
            m_noise: 8,
            truth,
            noise: NoiseModel::UniformRadius { max: 5.0 },
            family: PenaltyFamily::Lp { p: 0.5 },
            master_seed: split_seed(0xE5_04, 0, trial),
        };
        let exp =
            generate_experiment(&cfg).unwrap().sanitize(TransformGroup::Rotation2D).unwrap();
        let res = anneal_p(&exp, TransformGroup::Rotation2D, &schedule, &config).unwrap();
        let consensus = estimate_l0(&exp, TransformGroup::Rotation2D, config.consistency_tol)
            .unwrap();
        let reached = pos(&exp, &res.estimate.best, config.consistency_tol).unwrap().len();
        assert!(
            reached >= consensus.pos_size,
            "trial {trial}: anneal consensus {reached} below maximum {}",
            consensus.pos_size
        );
        assert!(res.matches_l0, "trial {trial}: diagnostic flag disagrees");
        assert!(res.p_final <= 0.9 && res.steps >= 1);
    }
}

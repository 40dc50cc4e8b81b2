mod common;

use itermeas::ensemble::map_indexed;
use itermeas::kernel::PointerDistribution;
use itermeas::rng::{stream_rng, trajectory_seed};
use itermeas::scaling::{
    diffusive_from_kernels, integrate_diffusive, integrate_jump_exact, integrate_jump_thinning, noise_covariance,
    DiffusiveMode, DiffusiveModel, DiffusiveOptions, JumpOptions, NoiseGenerator,
};
use itermeas::validate::{
    log_odds, sample_increments, test_equivalence, test_equivalence_resolved, test_increment_covariance,
    test_jump_compensator, TestStatus, LOG_ODDS_RESOLUTION,
};

use common::within_sigma;

#[test]
fn noise_increments_sum_to_zero() {
    let generator = NoiseGenerator::new(&[0.2, 0.3, 0.5]);
    let mut rng = stream_rng(4, 0);
    for _ in 0..1000 {
        let dx = generator.sample(1e-3, &mut rng);
        assert_eq!(dx.len(), 3);
        assert!(dx.iter().sum::<f64>().abs() < 1e-15);
    }
}

#[test]
fn increment_covariance_matches_formula() {
    let p0 = [0.2, 0.3, 0.5];
    let g = noise_covariance(&p0);
    for i in 0..3 {
        for j in 0..3 {
            let expected = if i == j { p0[i] } else { 0.0 } - p0[i] * p0[j];
            assert!((g[i][j] - expected).abs() < 1e-15);
        }
    }
    let increments = sample_increments(&p0, 1e-3, 1_000_000, 8);
    let report = test_increment_covariance(&increments, &p0, 1e-3);
    assert_eq!(report.status, TestStatus::Pass, "{report:?}");
}

#[test]
fn terminal_noise_variation_is_g_t() {
    let model = common::diff2();
    let q0 = common::uniform2();
    let horizon = 1.0;
    let paths = map_indexed(4000, |index| {
        let options = DiffusiveOptions::new(horizon, 1e-3, trajectory_seed(31, index as u64)).with_stride(1000);
        integrate_diffusive(&model, &q0, &options).unwrap()
    });
    let g = noise_covariance(model.p0());
    for i in 0..2 {
        for j in 0..2 {
            let products: Vec<f64> = paths
                .iter()
                .map(|p| {
                    let x = p.x_path.last().unwrap();
                    x[i] * x[j]
                })
                .collect();
            let (ok, z) = within_sigma(&products, g[i][j] * horizon, 4.0);
            assert!(ok, "entry ({i},{j}) z = {z}");
        }
    }
    for p in &paths {
        assert!(p.max_normalization_drift < 1e-6 * 1e-3);
    }
}

#[test]
fn diffusive_paths_collapse_to_prior_law() {
    let model = common::diff2();
    let q0 = PointerDistribution::new(vec![0.3, 0.7]).unwrap();
    let paths = map_indexed(1000, |index| {
        let options = DiffusiveOptions::new(20.0, 1e-3, trajectory_seed(32, index as u64)).with_stride(20_000);
        integrate_diffusive(&model, &q0, &options).unwrap()
    });
    let concentrated = paths
        .iter()
        .filter(|p| p.final_q().iter().cloned().fold(0.0, f64::max) > 1.0 - 1e-3)
        .count();
    assert!(concentrated >= 990, "{concentrated}");
    let in_a: Vec<f64> = paths.iter().map(|p| f64::from(u8::from(p.final_q()[0] > 0.5))).collect();
    let (ok, z) = within_sigma(&in_a, 0.3, 4.0);
    assert!(ok, "z = {z}");
    let mean_q: Vec<f64> = paths.iter().map(|p| p.final_q()[0]).collect();
    assert!(within_sigma(&mean_q, 0.3, 4.0).0);
}

#[test]
fn conditioned_paths_collapse_to_sampled_pointer() {
    let model = common::diff2();
    let q0 = common::uniform2();
    let paths = map_indexed(300, |index| {
        let options = DiffusiveOptions::new(20.0, 1e-3, trajectory_seed(33, index as u64))
            .with_mode(DiffusiveMode::Conditioned)
            .with_stride(20_000);
        integrate_diffusive(&model, &q0, &options).unwrap()
    });
    let hits = paths
        .iter()
        .filter(|p| {
            let alpha = p.sampled_alpha.unwrap();
            p.final_q()[alpha] > 0.99
        })
        .count();
    assert!(hits >= 297, "{hits}");
}

#[test]
fn coarse_steps_are_refined_not_clipped() {
    let model = DiffusiveModel::new(vec![0.5, 0.5], vec![vec![4.0, -4.0], vec![-4.0, 4.0]]).unwrap();
    let q0 = common::uniform2();
    let mut halvings = 0;
    for index in 0..50 {
        let options = DiffusiveOptions::new(5.0, 0.05, trajectory_seed(34, index));
        let path = integrate_diffusive(&model, &q0, &options).unwrap();
        halvings += path.halvings;
        for q in &path.q_path {
            assert!(q.iter().all(|&w| (-1e-9..=1.0 + 1e-9).contains(&w)));
            assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
    assert!(halvings > 0);
}

#[test]
fn diffusive_model_is_recovered_from_kernels() {
    let model = common::diff2();
    let coarse = model.kernel_at(1e-2).unwrap();
    let fine = model.kernel_at(1e-4).unwrap();
    let extraction = diffusive_from_kernels(&coarse, 1e-2, &fine, 1e-4).unwrap();
    for (a, b) in extraction.model.p0().iter().zip(model.p0()) {
        assert!((a - b).abs() < 1e-9);
    }
    for (ra, rb) in extraction.model.gamma().iter().zip(model.gamma()) {
        for (a, b) in ra.iter().zip(rb) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn jump_constructions_agree_in_law() {
    let model = common::pois2();
    let q0 = common::uniform2();
    let n = 3000;
    let thinned = map_indexed(n, |index| {
        let options = JumpOptions::new(5.0, 1e-3, trajectory_seed(41, index as u64)).with_stride(500);
        integrate_jump_thinning(&model, &q0, &options).unwrap()
    });
    let exact = map_indexed(n, |index| {
        integrate_jump_exact(&model, &q0, 5.0, trajectory_seed(42, index as u64)).unwrap()
    });
    let odds = |paths: &[itermeas::scaling::JumpPath]| paths.iter().map(|p| log_odds(p.final_q())).collect::<Vec<_>>();
    let counts = |paths: &[itermeas::scaling::JumpPath]| {
        paths.iter().map(|p| p.final_counts().iter().sum::<u64>() as f64).collect::<Vec<_>>()
    };
    let q_report = test_equivalence_resolved("q", &odds(&thinned), &odds(&exact), LOG_ODDS_RESOLUTION);
    assert_eq!(q_report.status, TestStatus::Pass, "{q_report:?}");
    let n_report = test_equivalence("n", &counts(&thinned), &counts(&exact));
    assert_eq!(n_report.status, TestStatus::Pass, "{n_report:?}");

    for paths in [&thinned, &exact] {
        let terminal: Vec<f64> = paths.iter().map(|p| p.final_q()[0]).collect();
        assert!(within_sigma(&terminal, 0.5, 4.0).0);
        let y: Vec<f64> = paths.iter().map(|p| p.y_path.last().unwrap()[0]).collect();
        let (ok, z) = within_sigma(&y, 0.0, 4.0);
        assert!(ok, "compensated count z = {z}");
    }
    let report = test_jump_compensator(&thinned, &model, 8);
    assert_eq!(report.status, TestStatus::Pass, "{report:?}");
}

#[test]
fn jump_paths_concentrate() {
    let model = common::pois2();
    let q0 = common::uniform2();
    let paths = map_indexed(400, |index| {
        let options = JumpOptions::new(80.0, 1e-3, trajectory_seed(43, index as u64)).with_stride(80_000);
        integrate_jump_thinning(&model, &q0, &options).unwrap()
    });
    let concentrated = paths
        .iter()
        .filter(|p| p.final_q().iter().cloned().fold(0.0, f64::max) > 1.0 - 1e-3)
        .count();
    assert!(concentrated >= 396, "{concentrated}");
}

#[test]
fn wrong_intensity_breaks_equivalence() {
    let q0 = common::uniform2();
    let fast = itermeas::scaling::JumpModel::new(0, 2, vec![vec![1.5], vec![2.5]]).unwrap();
    let a = map_indexed(2000, |index| {
        integrate_jump_exact(&common::pois2(), &q0, 5.0, trajectory_seed(44, index as u64)).unwrap()
    });
    let b = map_indexed(2000, |index| integrate_jump_exact(&fast, &q0, 5.0, trajectory_seed(45, index as u64)).unwrap());
    let counts = |paths: &[itermeas::scaling::JumpPath]| {
        paths.iter().map(|p| p.final_counts()[0] as f64).collect::<Vec<_>>()
    };
    assert_eq!(test_equivalence("n", &counts(&a), &counts(&b)).status, TestStatus::Fail);
}

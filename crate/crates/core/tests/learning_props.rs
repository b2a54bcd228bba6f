use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wassdrl_core::classification::{self, ClassificationProblem};
use wassdrl_core::regression::{self, RegressionProblem};
use wassdrl_core::{Dataset, LinearHypothesis, LossSpec, NormP, Task};

fn random_data(rng: &mut ChaCha8Rng, task: Task) -> Dataset {
    let big_n = rng.random_range(3..=8);
    let n = rng.random_range(1..=3);
    let rows: Vec<Vec<f64>> = (0..big_n).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| {
            let s = r.iter().sum::<f64>() + rng.random_range(-0.5..0.5);
            match task {
                Task::Regression => s,
                Task::Classification => if s >= 0.0 { 1.0 } else { -1.0 },
            }
        })
        .collect();
    Dataset::from_rows(&rows, &ys, task).unwrap()
}

fn random_w(rng: &mut ChaCha8Rng, n: usize) -> LinearHypothesis {
    LinearHypothesis::new((0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

fn norm(rng: &mut ChaCha8Rng) -> NormP {
    if rng.random_bool(0.5) { NormP::One } else { NormP::Inf }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pwl_classification_is_optimal(seed in any::<u64>(), kappa in prop::sample::select(vec![0.25, 1.0, f64::INFINITY])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_data(&mut rng, Task::Classification);
        let p = norm(&mut rng);
        let prob = ClassificationProblem::unbounded(&data, LossSpec::Hinge, p, kappa, 0.1).unwrap();
        let (w, obj) = classification::train_pwl_classification(&prob).unwrap();
        let at_w = classification::wc_expected_loss_classification_lp(&prob, &w).unwrap();
        prop_assert!((obj - at_w).abs() <= 1e-6 * (1.0 + obj));
        for _ in 0..10 {
            let other = random_w(&mut rng, data.dim());
            prop_assert!(obj <= classification::wc_expected_loss_classification_lp(&prob, &other).unwrap() + 1e-7);
        }
    }

    #[test]
    fn pwl_regression_is_optimal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_data(&mut rng, Task::Regression);
        let p = norm(&mut rng);
        let prob = RegressionProblem::unbounded(&data, LossSpec::Absolute, p, 0.2).unwrap();
        let (w, obj) = regression::train_pwl_regression(&prob).unwrap();
        let at_w = regression::regularized_objective(&data, &prob.loss, &w.w, 0.2, &prob.metric);
        prop_assert!((obj - at_w).abs() <= 1e-6 * (1.0 + obj));
        for _ in 0..10 {
            let other = random_w(&mut rng, data.dim());
            prop_assert!(obj <= regression::regularized_objective(&data, &prob.loss, &other.w, 0.2, &prob.metric) + 1e-7);
        }
    }

    #[test]
    fn optimal_value_grows_with_radius(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_data(&mut rng, Task::Classification);
        let mut prev = 0.0;
        for rho in [0.0, 0.05, 0.2, 1.0] {
            let prob = ClassificationProblem::unbounded(&data, LossSpec::Hinge, NormP::Inf, 0.5, rho).unwrap();
            let (_, obj) = classification::train_pwl_classification(&prob).unwrap();
            prop_assert!(obj >= prev - 1e-8);
            prev = obj;
        }
    }

    #[test]
    fn flip_cost_interpolates_towards_regularization(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_data(&mut rng, Task::Classification);
        let w = random_w(&mut rng, data.dim());
        let mut prev = f64::INFINITY;
        for kappa in [0.1, 0.5, 2.0, f64::INFINITY] {
            let prob = ClassificationProblem::unbounded(&data, LossSpec::Hinge, NormP::One, kappa, 0.3).unwrap();
            let v = classification::wc_expected_loss_classification_lp(&prob, &w).unwrap();
            prop_assert!(v <= prev + 1e-8);
            prev = v;
        }
        let closed = classification::regularized_objective(&data, &LossSpec::Hinge, &w.w, 0.3, NormP::One);
        prop_assert!((prev - closed).abs() <= 1e-7 * (1.0 + closed));
    }

    #[test]
    fn logistic_objective_matches_its_evaluator(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_data(&mut rng, Task::Classification);
        let prob = ClassificationProblem::unbounded(&data, LossSpec::Logloss, NormP::Inf, 0.5, 0.1).unwrap();
        let (w, obj) = classification::train_lipschitz_classification(&prob).unwrap();
        let (at_w, _) = classification::lipschitz_objective_at(&data, &LossSpec::Logloss, &w.w, 0.1, 0.5, NormP::Inf);
        prop_assert!((obj - at_w).abs() <= 1e-6 * (1.0 + obj));
        for _ in 0..10 {
            let other = random_w(&mut rng, data.dim());
            let (v, _) = classification::lipschitz_objective_at(&data, &LossSpec::Logloss, &other.w, 0.1, 0.5, NormP::Inf);
            prop_assert!(obj <= v + 1e-4 * (1.0 + v));
        }
    }
}

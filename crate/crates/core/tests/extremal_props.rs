use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wassdrl_core::classification::{self, ClassificationProblem};
use wassdrl_core::extremal::{
    worstcase_classification_exact, worstcase_classification_sequence, worstcase_regression_exact, worstcase_regression_sequence,
    WorstCaseDistribution,
};
use wassdrl_core::regression::{self, RegressionProblem};
use wassdrl_core::{Dataset, Error, LinearHypothesis, LossSpec, NormP, Task};

struct Instance {
    data: Dataset,
    w: LinearHypothesis,
    p: NormP,
    rho: f64,
}

fn instance(seed: u64, task: Task) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let big_n = rng.random_range(1..=4);
    let n = rng.random_range(1..=3);
    let rows: Vec<Vec<f64>> = (0..big_n).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let ys: Vec<f64> = (0..big_n)
        .map(|_| match task {
            Task::Regression => rng.random_range(-2.0..2.0),
            Task::Classification => if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        })
        .collect();
    let w = LinearHypothesis::new((0..n).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap();
    let p = if rng.random_bool(0.5) { NormP::One } else { NormP::Inf };
    let rho = [0.0, 0.1, 0.5, 1.0][rng.random_range(0..4)];
    Instance { data: Dataset::from_rows(&rows, &ys, task).unwrap(), w, p, rho }
}

fn check_feasible(wc: &WorstCaseDistribution, cost: f64, rho: f64) -> Result<(), TestCaseError> {
    prop_assert!((wc.total_mass() - 1.0).abs() <= 1e-9, "mass {}", wc.total_mass());
    prop_assert!(wc.atoms.iter().all(|a| a.mass >= -1e-12));
    prop_assert!(cost <= rho + 1e-7 * (1.0 + rho), "transport {cost} > {rho}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn regression_exact_is_feasible_and_tight(seed in any::<u64>(), abs in any::<bool>()) {
        let inst = instance(seed, Task::Regression);
        let loss = if abs { LossSpec::Absolute } else { LossSpec::eps_insensitive(0.3).unwrap() };
        let prob = RegressionProblem::unbounded(&inst.data, loss, inst.p, inst.rho).unwrap();
        let wc = worstcase_regression_exact(&prob, &inst.w).unwrap();
        check_feasible(&wc, wc.transport_cost(&inst.data, &prob.metric), inst.rho)?;
        let lp = regression::wc_expected_loss_regression_lp(&prob, &inst.w).unwrap();
        prop_assert!(wc.attained_value <= lp + 1e-7 * (1.0 + lp));
        prop_assert!((wc.attained_value + wc.gap_bound - lp).abs() <= 1e-6 * (1.0 + lp));
    }

    #[test]
    fn classification_exact_is_feasible_and_tight(seed in any::<u64>(), kappa in prop::sample::select(vec![0.01, 0.25, 1.0, 5.0])) {
        let inst = instance(seed, Task::Classification);
        let prob = ClassificationProblem::unbounded(&inst.data, LossSpec::Hinge, inst.p, kappa, inst.rho).unwrap();
        let wc = worstcase_classification_exact(&prob, &inst.w).unwrap();
        check_feasible(&wc, wc.transport_cost(&inst.data, &prob.metric), inst.rho)?;
        prop_assert!(wc.atoms.iter().all(|a| a.y == 1.0 || a.y == -1.0));
        let lp = classification::wc_expected_loss_classification_lp(&prob, &inst.w).unwrap();
        prop_assert!(wc.attained_value <= lp + 1e-7 * (1.0 + lp));
        prop_assert!((wc.attained_value + wc.gap_bound - lp).abs() <= 1e-6 * (1.0 + lp));
    }

    #[test]
    fn regression_sequence_approaches_worst_case(seed in any::<u64>()) {
        let mut inst = instance(seed, Task::Regression);
        inst.rho = inst.rho.max(0.1);
        let prob = RegressionProblem::unbounded(&inst.data, LossSpec::Absolute, inst.p, inst.rho).unwrap();
        let target = regression::regularized_objective(&inst.data, &prob.loss, &inst.w.w, inst.rho, &prob.metric);
        let mut prev_gap = f64::INFINITY;
        for gamma in [0.5, 0.1, 0.01] {
            let wc = worstcase_regression_sequence(&prob, &inst.w, gamma).unwrap();
            check_feasible(&wc, wc.transport_cost(&inst.data, &prob.metric), inst.rho)?;
            let gap = target - wc.attained_value;
            prop_assert!(gap >= -1e-7 * (1.0 + target));
            prop_assert!(gap <= prev_gap + 1e-9);
            prev_gap = gap;
        }
    }

    #[test]
    fn classification_sequence_stays_in_ball(seed in any::<u64>(), kappa in prop::sample::select(vec![0.25, 1.0])) {
        let mut inst = instance(seed, Task::Classification);
        inst.rho = inst.rho.max(0.1);
        let prob = ClassificationProblem::unbounded(&inst.data, LossSpec::Logloss, inst.p, kappa, inst.rho).unwrap();
        let lp = classification::wc_expected_loss_classification(&prob, &inst.w).unwrap();
        for gamma in [0.05, 0.01] {
            let wc = worstcase_classification_sequence(&prob, &inst.w, gamma).unwrap();
            check_feasible(&wc, wc.transport_cost(&inst.data, &prob.metric), inst.rho)?;
            prop_assert!(wc.attained_value <= lp + 1e-6 * (1.0 + lp));
        }
    }
}

#[test]
fn euclidean_exact_mode_is_rejected() {
    let data = Dataset::from_rows(&[[1.0]], &[1.0], Task::Regression).unwrap();
    let prob = RegressionProblem::unbounded(&data, LossSpec::Absolute, NormP::Two, 0.1).unwrap();
    let w = LinearHypothesis::new(vec![1.0]).unwrap();
    assert_eq!(worstcase_regression_exact(&prob, &w), Err(Error::UnsupportedNorm(NormP::Two)));
}

#[test]
fn cheap_flip_cost_flips_a_label() {
    let data = Dataset::from_rows(&[[2.0], [1.0]], &[1.0, 1.0], Task::Classification).unwrap();
    let prob = ClassificationProblem::unbounded(&data, LossSpec::Hinge, NormP::Inf, 0.01, 0.05).unwrap();
    let w = LinearHypothesis::new(vec![1.0]).unwrap();
    let wc = worstcase_classification_exact(&prob, &w).unwrap();
    assert!(wc.atoms.iter().any(|a| a.y == -1.0 && a.mass > 0.0));
}

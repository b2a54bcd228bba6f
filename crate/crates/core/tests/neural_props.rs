use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wassdrl_core::linalg::Matrix;
use wassdrl_core::neural::{
    drnn_convex_objective, lipschitz_upper, nn_predict, operator_norm, prox_layer, train_spgd, Activation, MlpSpec, SpgdOptions, WeightStack,
};
use wassdrl_core::{Dataset, LossSpec, NormP, Task};

fn prox_objective(x: &Matrix, w: &Matrix, eta: f64, p: NormP) -> f64 {
    let f = x.sub(w).frobenius();
    0.5 * f * f + eta * operator_norm(x, p)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn random_net(rng: &mut ChaCha8Rng, p: NormP) -> (MlpSpec, WeightStack) {
    let n = rng.random_range(1..=3);
    let h = rng.random_range(2..=5);
    let act = [Activation::Tanh, Activation::Sigmoid, Activation::Relu][rng.random_range(0..3)];
    let spec = MlpSpec::new(vec![n, h, 1], vec![act, Activation::Identity], p).unwrap();
    let mats = vec![random_matrix(rng, h, n, 1.5), random_matrix(rng, 1, h, 1.5)];
    let w = WeightStack::new(&spec, mats).unwrap();
    (spec, w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prox_beats_perturbations(seed in any::<u64>(), p in prop::sample::select(vec![NormP::One, NormP::Two, NormP::Inf])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r, c) = (rng.random_range(1..=3), rng.random_range(1..=4));
        let w = random_matrix(&mut rng, r, c, 2.0);
        let eta = rng.random_range(0.05..2.0);
        let x = prox_layer(&w, eta, p);
        let best = prox_objective(&x, &w, eta, p);
        for k in 0..1000 {
            let scale = [1e-1, 1e-3, 1e-5][k % 3];
            let d = random_matrix(&mut rng, r, c, scale);
            let y = Matrix::from_vec(r, c, x.data().iter().zip(d.data()).map(|(a, b)| a + b).collect()).unwrap();
            prop_assert!(prox_objective(&y, &w, eta, p) >= best - 1e-9, "perturbation {k} improves the prox objective");
        }
    }

    #[test]
    fn lipschitz_bound_dominates_samples(seed in any::<u64>(), p in prop::sample::select(vec![NormP::One, NormP::Two, NormP::Inf])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (spec, w) = random_net(&mut rng, p);
        let bound = lipschitz_upper(&spec, &w);
        let n = spec.input_dim();
        for _ in 0..200 {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = a.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
            let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let dist = p.norm(&diff);
            if dist > 1e-9 {
                let ratio = (nn_predict(&spec, &w, &a).unwrap() - nn_predict(&spec, &w, &b).unwrap()).abs() / dist;
                prop_assert!(ratio <= bound * (1.0 + 1e-9) + 1e-12);
            }
        }
    }
}

#[test]
fn spgd_improves_the_surrogate() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rows: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let ys: Vec<f64> = rows.iter().map(|r| if r[0] * r[0] + r[1] > 0.3 { 1.0 } else { -1.0 }).collect();
    let data = Dataset::from_rows(&rows, &ys, Task::Classification).unwrap();
    let spec = MlpSpec::new(vec![2, 6, 1], vec![Activation::Tanh, Activation::Identity], NormP::Two).unwrap();
    let opts = SpgdOptions { epochs: 150, eta0: 0.05, ..SpgdOptions::default() };
    let res = train_spgd(&spec, &data, &LossSpec::Logloss, 0.01, &opts, None).unwrap();
    let first = res.trace.first().unwrap().objective;
    let last = res.trace.last().unwrap().objective;
    assert!(res.trace.iter().all(|r| r.objective.is_finite() && r.reg_term >= 0.0));
    assert!(last < first, "{last} >= {first}");
    let recomputed = drnn_convex_objective(&spec, &res.weights, &data, &LossSpec::Logloss, 0.01).unwrap();
    assert!((recomputed - last).abs() <= 1e-12);
    let again = train_spgd(&spec, &data, &LossSpec::Logloss, 0.01, &opts, None).unwrap();
    assert_eq!(again.weights, res.weights);
}

use proptest::prelude::*;
use wassdrl_core::bounds::{error_interval, radius_basic, radius_improved_formula, risk_interval, HypothesisBox, LightTailParams};
use wassdrl_core::{Dataset, LinearHypothesis, NormP, Task};

fn rows() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (1usize..=3, 1usize..=6).prop_flat_map(|(n, big_n)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0..2.0f64, n), big_n),
            prop::collection::vec(-2.0..2.0f64, big_n),
            prop::collection::vec(-1.5..1.5f64, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basic_radius_is_monotone(n_samples in 1usize..100_000, dim in 2usize..40, eta in 0.001..0.5f64) {
        let params = LightTailParams::default();
        let r = radius_basic(n_samples, dim, eta, &params).unwrap();
        prop_assert!(r > 0.0 && r.is_finite());
        prop_assert!(radius_basic(n_samples * 2, dim, eta, &params).unwrap() <= r + 1e-15);
        prop_assert!(radius_basic(n_samples, dim, (eta * 2.0).min(0.99), &params).unwrap() <= r + 1e-15);
    }

    #[test]
    fn improved_radius_is_monotone(n_samples in 10usize..1_000_000, dim in 1usize..40, eta in 0.001..0.5f64) {
        let params = LightTailParams::default();
        let bx = HypothesisBox::unit_basis(0.5, 2.0).unwrap();
        let (r, _) = radius_improved_formula(n_samples, dim, eta, &params, &bx);
        let (r2, _) = radius_improved_formula(n_samples * 4, dim, eta, &params, &bx);
        prop_assert!(r2 <= r + 1e-15);
    }

    #[test]
    fn error_intervals_nest((xs, ys, w) in rows()) {
        let data = Dataset::from_rows(&xs, &ys, Task::Regression).unwrap();
        let w = LinearHypothesis::new(w).unwrap();
        let mut prev = error_interval(&data, &w, 0.0, NormP::Inf).unwrap();
        prop_assert!((prev.0 - prev.1).abs() <= 1e-15);
        for rho in [0.01, 0.1, 1.0] {
            let cur = error_interval(&data, &w, rho, NormP::Inf).unwrap();
            prop_assert!(cur.0 <= prev.0 + 1e-12 && cur.1 >= prev.1 - 1e-12);
            prev = cur;
        }
    }

    #[test]
    fn risk_intervals_nest((xs, ys, w) in rows()) {
        let labels: Vec<f64> = ys.iter().map(|y| if *y >= 0.0 { 1.0 } else { -1.0 }).collect();
        let data = Dataset::from_rows(&xs, &labels, Task::Classification).unwrap();
        let w = LinearHypothesis::new(w).unwrap();
        let mut prev = risk_interval(&data, &w, 0.0, 1.0, NormP::One).unwrap();
        prop_assert!((prev.0 - prev.1).abs() <= 1e-9);
        for rho in [0.01, 0.1, 1.0] {
            let cur = risk_interval(&data, &w, rho, 1.0, NormP::One).unwrap();
            prop_assert!(0.0 <= cur.0 && cur.0 <= cur.1 && cur.1 <= 1.0);
            prop_assert!(cur.0 <= prev.0 + 1e-9 && cur.1 >= prev.1 - 1e-9);
            prev = cur;
        }
    }
}

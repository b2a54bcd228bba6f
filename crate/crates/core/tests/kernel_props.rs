use proptest::prelude::*;
use wassdrl_core::kernel::{kernel_eval, kernel_matrix, kernel_predict, lifted_radius, train_kernel_classification, KernelSpec};
use wassdrl_core::linalg::sym_eigen;
use wassdrl_core::{Dataset, Error, LossSpec, Task};

fn specs(radius: f64) -> Vec<KernelSpec> {
    vec![
        KernelSpec::Linear,
        KernelSpec::Gaussian { gamma: 0.7 },
        KernelSpec::Laplacian { gamma: 0.4 },
        KernelSpec::Polynomial { gamma: 0.5, degree: 3, radius },
    ]
}

fn points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=3).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-1.5..1.5f64, n), 2..7))
}

fn max_norm(rows: &[Vec<f64>]) -> f64 {
    rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max) + 1e-6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_matrices_are_psd(rows in points()) {
        let ys = vec![1.0; rows.len()];
        let data = Dataset::from_rows(&rows, &ys, Task::Classification).unwrap();
        for spec in specs(max_norm(&rows)) {
            let k = kernel_matrix(&data, &spec).unwrap();
            prop_assert!(k.is_symmetric(1e-12));
            let (vals, _) = sym_eigen(&k).unwrap();
            prop_assert!(vals.iter().all(|&v| v >= -1e-9 * (1.0 + k.max_abs())), "{spec:?}: {vals:?}");
        }
    }

    #[test]
    fn feature_distance_is_nonnegative(rows in points()) {
        for spec in specs(max_norm(&rows)) {
            let (a, b) = (&rows[0], &rows[1]);
            let sq = kernel_eval(&spec, a, a).unwrap() - 2.0 * kernel_eval(&spec, a, b).unwrap() + kernel_eval(&spec, b, b).unwrap();
            prop_assert!(sq >= -1e-10);
        }
    }

    #[test]
    fn lifted_radius_is_monotone(r1 in 0.0..5.0f64, r2 in 0.0..5.0f64) {
        let (lo, hi) = (r1.min(r2), r1.max(r2));
        for spec in specs(2.0) {
            prop_assert!(lifted_radius(lo, &spec, 3, Task::Classification) <= lifted_radius(hi, &spec, 3, Task::Classification) + 1e-12);
        }
    }
}

#[test]
fn trained_kernel_classifier_predicts_through_anchors() {
    let rows = [[0.0, 1.0], [1.0, 0.2], [-1.0, -0.5], [0.3, -1.2], [-0.4, 0.9]];
    let ys = [1.0, 1.0, -1.0, -1.0, 1.0];
    let data = Dataset::from_rows(&rows, &ys, Task::Classification).unwrap();
    let spec = KernelSpec::Gaussian { gamma: 1.0 };
    let (h, obj) = train_kernel_classification(&data, &spec, &LossSpec::Hinge, 0.05, 1.0).unwrap();
    assert!(obj.is_finite() && obj >= 0.0);
    let k = kernel_matrix(&data, &spec).unwrap();
    let kb = k.matvec(&h.beta);
    for (i, row) in rows.iter().enumerate() {
        assert!((kernel_predict(&h, row).unwrap() - kb[i]).abs() <= 1e-12);
    }
}

#[test]
fn polynomial_kernel_rejects_points_outside_radius() {
    let spec = KernelSpec::Polynomial { gamma: 1.0, degree: 2, radius: 1.0 };
    assert!(matches!(kernel_eval(&spec, &[2.0, 0.0], &[0.0, 0.0]), Err(Error::RadiusViolation { .. })));
}

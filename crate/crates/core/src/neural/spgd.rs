//! Stochastic proximal gradient training of the norm-sum regularized
//! objective `emp + ρ̄ Σ_m ‖W_m‖`.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{drnn_convex_objective, nn_backprop, norm_sum, prox_layer, MlpSpec, WeightStack};
use crate::data::Dataset;
use crate::linalg::{axpy, Matrix};
use crate::loss::LossSpec;
use crate::math;
use crate::{Error, Result};

const DIVERGENCE: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpgdOptions {
    pub epochs: usize,
    /// Initial step `η₀`; epoch `k` uses `η₀/(1 + k/decay)`.
    pub eta0: f64,
    pub decay: f64,
    pub momentum: f64,
    pub batch_size: usize,
    /// Stop once the relative objective improvement over an epoch drops below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SpgdOptions {
    fn default() -> Self {
        Self { epochs: 200, eta0: 1e-3, decay: 50.0, momentum: 0.9, batch_size: 16, tolerance: 1e-9, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRow {
    pub epoch: usize,
    pub objective: f64,
    pub reg_term: f64,
}

#[derive(Debug, Clone)]
pub struct SpgdResult {
    pub weights: WeightStack,
    pub trace: Vec<TraceRow>,
}

/// Glorot-uniform initialization from the seeded generator.
pub fn init_weights(spec: &MlpSpec, rng: &mut ChaCha8Rng) -> WeightStack {
    let mats = (0..spec.depth())
        .map(|m| {
            let (rows, cols) = (spec.sizes[m + 1], spec.sizes[m]);
            let a = math::sqrt(6.0 / (rows + cols) as f64);
            let data = (0..rows * cols).map(|_| rng.random_range(-a..a)).collect();
            Matrix::from_vec(rows, cols, data).expect("sizes match")
        })
        .collect();
    WeightStack { mats }
}

/// Minimizes `emp + ρ̄ Σ‖W_m‖` by mini-batch steps
/// `W ← prox_{ηρ̄‖·‖}(W + V)` with heavy-ball velocity `V ← μV - η∇`.
/// Starts from `init` or from a seeded Glorot draw.
pub fn train_spgd(
    spec: &MlpSpec,
    dataset: &Dataset,
    loss: &LossSpec,
    rho_bar: f64,
    opts: &SpgdOptions,
    init: Option<WeightStack>,
) -> Result<SpgdResult> {
    dataset.check_dim(spec.input_dim())?;
    if !(rho_bar >= 0.0) || !(opts.eta0 > 0.0) || opts.batch_size == 0 || !(opts.decay > 0.0) {
        return Err(Error::InvalidParameter("SPGD needs ρ̄ ≥ 0, η₀ > 0, decay > 0 and a positive batch size".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut w = match init {
        Some(w) => WeightStack::new(spec, w.mats)?,
        None => init_weights(spec, &mut rng),
    };
    let mut velocity: Vec<Matrix> = w.mats.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut trace = Vec::with_capacity(opts.epochs + 1);
    let record = |epoch: usize, w: &WeightStack| -> Result<TraceRow> {
        let objective = drnn_convex_objective(spec, w, dataset, loss, rho_bar)?;
        if !(objective <= DIVERGENCE) {
            return Err(Error::DivergenceDetected { epoch });
        }
        Ok(TraceRow { epoch, objective, reg_term: rho_bar * norm_sum(spec, w) })
    };
    trace.push(record(0, &w)?);
    for epoch in 1..=opts.epochs {
        let step = opts.eta0 / (1.0 + (epoch - 1) as f64 / opts.decay);
        order.shuffle(&mut rng);
        for batch in order.chunks(opts.batch_size) {
            let mut grads: Vec<Matrix> = w.mats.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
            for &i in batch {
                let g = nn_backprop(spec, &w, dataset.x(i), dataset.y(i), loss, dataset.task())?;
                for (acc, gi) in grads.iter_mut().zip(&g) {
                    axpy(1.0 / batch.len() as f64, gi.data(), acc.data_mut());
                }
            }
            for ((wm, vm), gm) in w.mats.iter_mut().zip(&mut velocity).zip(&grads) {
                for (v, g) in vm.data_mut().iter_mut().zip(gm.data()) {
                    *v = opts.momentum * *v - step * g;
                }
                axpy(1.0, vm.data(), wm.data_mut());
                *wm = prox_layer(wm, step * rho_bar, spec.p);
            }
        }
        let row = record(epoch, &w)?;
        let prev = trace.last().map_or(f64::INFINITY, |r: &TraceRow| r.objective);
        trace.push(row);
        if (prev - row.objective).abs() <= opts.tolerance * prev.abs().max(1.0) {
            break;
        }
    }
    Ok(SpgdResult { weights: w, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Task;
    use crate::neural::Activation;
    use crate::norm::NormP;
    use alloc::vec;

    fn linear_data() -> Dataset {
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [((i * 7) % 11) as f64 / 5.0 - 1.0, ((i * 3) % 13) as f64 / 6.0 - 1.0]).collect();
        let ys: Vec<f64> = rows.iter().map(|r| 0.7 * r[0] - 1.2 * r[1]).collect();
        Dataset::from_rows(&rows, &ys, Task::Regression).unwrap()
    }

    #[test]
    fn recovers_generating_weights() {
        let d = linear_data();
        let spec = MlpSpec::new(vec![2, 1], vec![Activation::Identity], NormP::Two).unwrap();
        let opts = SpgdOptions { epochs: 400, eta0: 0.05, momentum: 0.5, batch_size: 8, tolerance: 0.0, ..Default::default() };
        let r = train_spgd(&spec, &d, &LossSpec::Huber { delta: 100.0 }, 0.0, &opts, None).unwrap();
        let w = r.weights.mats[0].row(0);
        assert!((w[0] - 0.7).abs() < 1e-2 && (w[1] + 1.2).abs() < 1e-2, "{w:?}");
    }

    #[test]
    fn deterministic_given_seed() {
        let d = linear_data();
        let spec = MlpSpec::new(vec![2, 3, 1], vec![Activation::Tanh, Activation::Identity], NormP::One).unwrap();
        let opts = SpgdOptions { epochs: 5, seed: 9, ..Default::default() };
        let a = train_spgd(&spec, &d, &LossSpec::Absolute, 0.1, &opts, None).unwrap();
        let b = train_spgd(&spec, &d, &LossSpec::Absolute, 0.1, &opts, None).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn heavy_regularization_zeroes_weights() {
        let d = linear_data();
        let spec = MlpSpec::new(vec![2, 1], vec![Activation::Identity], NormP::Inf).unwrap();
        let opts = SpgdOptions { epochs: 50, eta0: 0.05, momentum: 0.0, ..Default::default() };
        let r = train_spgd(&spec, &d, &LossSpec::Absolute, 50.0, &opts, None).unwrap();
        assert!(r.weights.mats[0].max_abs() < 1e-9);
    }
}

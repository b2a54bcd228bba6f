//! Feed-forward networks regularized by the product of layer operator norms.
//!
//! For an `M`-layer network `h(x) = σ_M(W_M ⋯ σ₁(W₁x))` with 1-Lipschitz
//! activations the worst-case expected loss over a Wasserstein ball is
//! bounded by the empirical loss plus `ρ·lip(L)·max{Π lip(σ_m)‖W_m‖, c/κ}`.
//! Replacing the product by the sum gives a convex surrogate that can be
//! trained by stochastic proximal gradient steps.

mod prox;
mod spgd;

pub use prox::{prox_layer, prox_macs, prox_mars, prox_spectral, singular_value_threshold};
pub use spgd::{train_spgd, SpgdOptions, SpgdResult, TraceRow};

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Dataset, Task};
use crate::linalg::{svd, Matrix};
use crate::loss::LossSpec;
use crate::math;
use crate::norm::NormP;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "name", rename_all = "snake_case"))]
pub enum Activation {
    Tanh,
    Sigmoid,
    /// Only on hidden layers of width at least two.
    Softmax,
    Relu,
    Elu { alpha: f64 },
    Identity,
}

impl Activation {
    pub fn elu() -> Self {
        Self::Elu { alpha: 1.0 }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            Self::Elu { alpha } => alpha.max(1.0),
            _ => 1.0,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Self::Tanh | Self::Sigmoid | Self::Softmax)
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        match *self {
            Self::Tanh => z.iter().map(|v| math::tanh(*v)).collect(),
            Self::Sigmoid => z.iter().map(|v| math::sigmoid(*v)).collect(),
            Self::Relu => z.iter().map(|v| v.max(0.0)).collect(),
            Self::Elu { alpha } => z.iter().map(|v| if *v > 0.0 { *v } else { alpha * math::expm1(*v) }).collect(),
            Self::Identity => z.to_vec(),
            Self::Softmax => {
                let top = z.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
                let e: Vec<f64> = z.iter().map(|v| math::exp(v - top)).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            }
        }
    }

    /// `J_σ(z)ᵀ g` given the pre-activation `z` and the output `a = σ(z)`.
    fn backward(&self, z: &[f64], a: &[f64], g: &[f64]) -> Vec<f64> {
        match *self {
            Self::Tanh => a.iter().zip(g).map(|(t, gi)| (1.0 - t * t) * gi).collect(),
            Self::Sigmoid => a.iter().zip(g).map(|(s, gi)| s * (1.0 - s) * gi).collect(),
            Self::Relu => z.iter().zip(g).map(|(v, gi)| if *v > 0.0 { *gi } else { 0.0 }).collect(),
            Self::Elu { alpha } => z.iter().zip(g).map(|(v, gi)| if *v > 0.0 { *gi } else { alpha * math::exp(*v) * gi }).collect(),
            Self::Identity => g.to_vec(),
            Self::Softmax => {
                let sg: f64 = a.iter().zip(g).map(|(s, gi)| s * gi).sum();
                a.iter().zip(g).map(|(s, gi)| s * (gi - sg)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "LayerRepr", into = "LayerRepr"))]
pub struct Layer {
    pub weights: Matrix,
    pub activation: Activation,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct LayerRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    activation: Activation,
}

#[cfg(feature = "serde")]
impl TryFrom<LayerRepr> for Layer {
    type Error = Error;
    fn try_from(r: LayerRepr) -> Result<Self> {
        Ok(Self { weights: Matrix::from_vec(r.rows, r.cols, r.data)?, activation: r.activation })
    }
}

#[cfg(feature = "serde")]
impl From<Layer> for LayerRepr {
    fn from(l: Layer) -> Self {
        Self { rows: l.weights.rows(), cols: l.weights.cols(), data: l.weights.data().to_vec(), activation: l.activation }
    }
}

/// Layer sizes `n₁ = n, …, n_{M+1} = 1`, activations and the feature-space
/// norm shared by all layers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpSpec {
    pub sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub p: NormP,
}

impl MlpSpec {
    pub fn new(sizes: Vec<usize>, activations: Vec<Activation>, p: NormP) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(Error::InvalidParameter("need M ≥ 1 layers and one activation per layer".into()));
        }
        if sizes.contains(&0) || *sizes.last().unwrap() != 1 {
            return Err(Error::InvalidParameter("layer sizes must be positive with a single output".into()));
        }
        for (m, a) in activations.iter().enumerate() {
            if *a == Activation::Softmax && (m + 1 == activations.len() || sizes[m + 1] < 2) {
                return Err(Error::Unsupported("softmax is only supported on hidden layers of width ≥ 2".into()));
            }
            if let Activation::Elu { alpha } = a {
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidParameter("ELU needs α > 0".into()));
                }
            }
        }
        Ok(Self { sizes, activations, p })
    }

    pub fn depth(&self) -> usize {
        self.activations.len()
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    /// Default bound `c` on `max{1, 2 sup|h|}` for classification: 2 when the
    /// output activation is bounded by one.
    pub fn default_c(&self) -> Option<f64> {
        self.activations.last().filter(|a| a.is_bounded()).map(|_| 2.0)
    }
}

/// Weight matrices `W_m ∈ ℝ^{n_{m+1}×n_m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStack {
    pub mats: Vec<Matrix>,
}

impl WeightStack {
    pub fn new(spec: &MlpSpec, mats: Vec<Matrix>) -> Result<Self> {
        if mats.len() != spec.depth() {
            return Err(Error::DimensionMismatch { expected: spec.depth(), found: mats.len() });
        }
        for (m, w) in mats.iter().enumerate() {
            if w.rows() != spec.sizes[m + 1] || w.cols() != spec.sizes[m] {
                return Err(Error::DimensionMismatch { expected: spec.sizes[m + 1] * spec.sizes[m], found: w.rows() * w.cols() });
            }
            if w.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite weight".into()));
            }
        }
        Ok(Self { mats })
    }

    pub fn zeros(spec: &MlpSpec) -> Self {
        Self { mats: (0..spec.depth()).map(|m| Matrix::zeros(spec.sizes[m + 1], spec.sizes[m])).collect() }
    }
}

/// A network with its weights, the unit that is persisted.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Network {
    pub layers: Vec<Layer>,
    pub p: NormP,
}

impl Network {
    pub fn from_parts(spec: &MlpSpec, weights: &WeightStack) -> Self {
        let layers = weights
            .mats
            .iter()
            .zip(&spec.activations)
            .map(|(w, a)| Layer { weights: w.clone(), activation: *a })
            .collect();
        Self { layers, p: spec.p }
    }

    pub fn into_parts(self) -> Result<(MlpSpec, WeightStack)> {
        let mut sizes = vec![self.layers.first().map_or(0, |l| l.weights.cols())];
        sizes.extend(self.layers.iter().map(|l| l.weights.rows()));
        let spec = MlpSpec::new(sizes, self.layers.iter().map(|l| l.activation).collect(), self.p)?;
        let w = WeightStack::new(&spec, self.layers.into_iter().map(|l| l.weights).collect())?;
        Ok((spec, w))
    }
}

/// Pre-activations `z_m` and layer inputs `x_m` (with `x_{M+1}` last).
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> f64 {
        self.post.last().unwrap()[0]
    }
}

pub fn nn_forward(spec: &MlpSpec, weights: &WeightStack, x: &[f64]) -> Result<ForwardCache> {
    if x.len() != spec.input_dim() {
        return Err(Error::DimensionMismatch { expected: spec.input_dim(), found: x.len() });
    }
    let mut post = vec![x.to_vec()];
    let mut pre = Vec::with_capacity(spec.depth());
    for (w, act) in weights.mats.iter().zip(&spec.activations) {
        let z = w.matvec(post.last().unwrap());
        post.push(act.apply(&z));
        pre.push(z);
    }
    Ok(ForwardCache { pre, post })
}

pub fn nn_predict(spec: &MlpSpec, weights: &WeightStack, x: &[f64]) -> Result<f64> {
    Ok(nn_forward(spec, weights, x)?.output())
}

/// Induced operator norm `sup_{‖x‖_p = 1} ‖Wx‖_p`.
pub fn operator_norm(w: &Matrix, p: NormP) -> f64 {
    match p {
        NormP::One => (0..w.cols()).map(|j| w.col(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max),
        NormP::Inf => (0..w.rows()).map(|i| w.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max),
        NormP::Two => svd(w).1.first().copied().unwrap_or(0.0),
    }
}

/// Upper bound `Π lip(σ_m)‖W_m‖` on the Lipschitz constant of the network.
pub fn lipschitz_upper(spec: &MlpSpec, weights: &WeightStack) -> f64 {
    weights.mats.iter().zip(&spec.activations).map(|(w, a)| a.lipschitz() * operator_norm(w, spec.p)).product()
}

fn loss_argument(task: Task, h: f64, y: f64) -> f64 {
    match task {
        Task::Regression => h - y,
        Task::Classification => y * h,
    }
}

pub fn nn_empirical_loss(spec: &MlpSpec, weights: &WeightStack, dataset: &Dataset, loss: &LossSpec) -> Result<f64> {
    dataset.check_dim(spec.input_dim())?;
    let mut s = 0.0;
    for i in 0..dataset.len() {
        let h = nn_predict(spec, weights, dataset.x(i))?;
        s += loss.eval(loss_argument(dataset.task(), h, dataset.y(i)));
    }
    Ok(s / dataset.len() as f64)
}

/// Upper bound on the worst-case expected loss:
/// `emp + ρ·lip(L)·max{Π lip(σ_m)‖W_m‖, c/κ}`.
pub fn drnn_objective(spec: &MlpSpec, weights: &WeightStack, dataset: &Dataset, loss: &LossSpec, rho: f64, kappa: f64, c: f64) -> Result<f64> {
    let emp = nn_empirical_loss(spec, weights, dataset, loss)?;
    let flip = if kappa.is_finite() { c / kappa } else { 0.0 };
    Ok(emp + rho * loss.lipschitz() * lipschitz_upper(spec, weights).max(flip))
}

/// `emp + ρ̄ Σ_m ‖W_m‖`, the convex-regularizer surrogate.
pub fn drnn_convex_objective(spec: &MlpSpec, weights: &WeightStack, dataset: &Dataset, loss: &LossSpec, rho_bar: f64) -> Result<f64> {
    let emp = nn_empirical_loss(spec, weights, dataset, loss)?;
    Ok(emp + rho_bar * norm_sum(spec, weights))
}

pub(crate) fn norm_sum(spec: &MlpSpec, weights: &WeightStack) -> f64 {
    weights.mats.iter().map(|w| operator_norm(w, spec.p)).sum()
}

/// Gradients of the single-sample loss with respect to each `W_m`. ReLU
/// takes slope 0 at the kink; the loss uses [`LossSpec::subgradient`].
pub fn nn_backprop(spec: &MlpSpec, weights: &WeightStack, x: &[f64], y: f64, loss: &LossSpec, task: Task) -> Result<Vec<Matrix>> {
    let cache = nn_forward(spec, weights, x)?;
    let h = cache.output();
    let dl = loss.subgradient(loss_argument(task, h, y));
    let mut delta = vec![match task {
        Task::Regression => dl,
        Task::Classification => y * dl,
    }];
    let mut grads: Vec<Matrix> = Vec::with_capacity(spec.depth());
    for m in (0..spec.depth()).rev() {
        let gz = spec.activations[m].backward(&cache.pre[m], &cache.post[m + 1], &delta);
        let input = &cache.post[m];
        let mut g = Matrix::zeros(gz.len(), input.len());
        for (r, gr) in gz.iter().enumerate() {
            for (c, xc) in input.iter().enumerate() {
                g[(r, c)] = gr * xc;
            }
        }
        delta = weights.mats[m].tmatvec(&gz);
        grads.push(g);
    }
    grads.reverse();
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_layer(act: Activation, w: &[f64]) -> (MlpSpec, WeightStack) {
        let spec = MlpSpec::new(vec![w.len(), 1], vec![act], NormP::Two).unwrap();
        let ws = WeightStack::new(&spec, vec![Matrix::from_vec(1, w.len(), w.to_vec()).unwrap()]).unwrap();
        (spec, ws)
    }

    #[test]
    fn forward_basics() {
        let (spec, w) = one_layer(Activation::Sigmoid, &[0.0, 0.0]);
        assert_eq!(nn_predict(&spec, &w, &[3.0, -1.0]).unwrap(), 0.5);
        let spec = MlpSpec::new(vec![2, 2, 1], vec![Activation::Relu, Activation::Relu], NormP::Inf).unwrap();
        let w = WeightStack::new(&spec, vec![Matrix::identity(2), Matrix::from_vec(1, 2, vec![1.0, 0.0]).unwrap()]).unwrap();
        let c = nn_forward(&spec, &w, &[0.3, 2.0]).unwrap();
        assert_eq!(c.post[1], vec![0.3, 2.0]);
        assert_eq!(c.output(), 0.3);
    }

    #[test]
    fn operator_norm_catalog() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(operator_norm(&a, NormP::One), 6.0);
        assert_eq!(operator_norm(&a, NormP::Inf), 7.0);
        let r1 = Matrix::from_rows(&[[3.0, 4.0], [6.0, 8.0]]).unwrap();
        assert!((operator_norm(&r1, NormP::Two) - 5.0 * math::sqrt(5.0)).abs() < 1e-12);
        for p in [NormP::One, NormP::Two, NormP::Inf] {
            assert!((operator_norm(&Matrix::identity(3), p) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_layer_gradient_is_residual_times_input() {
        let (spec, w) = one_layer(Activation::Identity, &[0.5, -1.0]);
        let loss = LossSpec::Huber { delta: 100.0 };
        let g = nn_backprop(&spec, &w, &[2.0, 1.0], 1.0, &loss, Task::Regression).unwrap();
        // residual 0.5·2 - 1 - 1 = -1
        assert_eq!(g[0].row(0), &[-2.0, -1.0]);
    }

    #[test]
    fn softmax_rejected_on_output() {
        assert!(MlpSpec::new(vec![3, 1], vec![Activation::Softmax], NormP::Two).is_err());
        assert!(MlpSpec::new(vec![3, 2, 1], vec![Activation::Softmax, Activation::Tanh], NormP::Two).is_ok());
    }

    #[test]
    fn single_layer_objectives_coincide() {
        let d = Dataset::from_rows(&[[1.0, 0.0], [0.0, 2.0]], &[1.0, -1.0], Task::Classification).unwrap();
        let (spec, w) = one_layer(Activation::Identity, &[0.4, -0.3]);
        let loss = LossSpec::Hinge;
        let a = drnn_objective(&spec, &w, &d, &loss, 0.2, f64::INFINITY, 2.0).unwrap();
        let b = drnn_convex_objective(&spec, &w, &d, &loss, 0.2).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}

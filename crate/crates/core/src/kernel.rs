//! Kernelized distributionally robust learning.
//!
//! Under a calm kernel the Wasserstein ball around the lifted samples
//! `(Φ(x̂ᵢ), ŷᵢ)` contains the image of the original ball with a radius
//! inflated by the growth function `g`. The lifted problems reduce to finite
//! programs over the coefficients of `h = Σ βᵢ k(·, x̂ᵢ)`; substituting
//! `u = 𝒦^{1/2}β` turns them into linear problems with features `𝒦^{1/2}`.

use alloc::vec::Vec;

use crate::classification::{margin_objective, train_lipschitz_classification, ClassificationProblem};
use crate::data::{Dataset, Task};
use crate::linalg::{dot, norm2, Matrix};
use crate::loss::LossSpec;
use crate::math;
use crate::metric::TransportCost;
use crate::norm::NormP;
use crate::regression::{train_lipschitz_regression, RegressionProblem};
use crate::solver::{sym_eig_pinv_sqrt, sym_eig_sqrt};
use crate::{Error, Result};

const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "name", rename_all = "snake_case"))]
pub enum KernelSpec {
    Linear,
    Gaussian { gamma: f64 },
    Laplacian { gamma: f64 },
    /// `(γ⟨x₁, x₂⟩ + 1)^d` on the ball `‖x‖₂ ≤ radius`.
    Polynomial { gamma: f64, degree: u32, radius: f64 },
}

impl KernelSpec {
    /// Polynomial kernel whose radius bound covers every input of `dataset`.
    pub fn polynomial_for(dataset: &Dataset, gamma: f64, degree: u32) -> Self {
        let r = (0..dataset.len()).map(|i| norm2(dataset.x(i))).fold(0.0f64, f64::max);
        let radius = if r > 0.0 { r * (1.0 + 1e-9) } else { 1.0 };
        Self::Polynomial { gamma, degree, radius }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Linear => true,
            Self::Gaussian { gamma } | Self::Laplacian { gamma } => gamma > 0.0 && gamma.is_finite(),
            Self::Polynomial { gamma, degree, radius } => {
                gamma > 0.0 && gamma.is_finite() && degree >= 1 && radius > 0.0 && radius.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!("invalid kernel {self:?}")))
        }
    }

    fn check_radius(&self, x: &[f64]) -> Result<()> {
        if let Self::Polynomial { radius, .. } = *self {
            let nx = norm2(x);
            if nx > radius {
                return Err(Error::RadiusViolation { norm: nx, radius });
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Gaussian { .. } => "gaussian",
            Self::Laplacian { .. } => "laplacian",
            Self::Polynomial { .. } => "polynomial",
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, x1: &[f64], x2: &[f64]) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::DimensionMismatch { expected: x1.len(), found: x2.len() });
    }
    spec.check_radius(x1)?;
    spec.check_radius(x2)?;
    Ok(match *spec {
        KernelSpec::Linear => dot(x1, x2),
        KernelSpec::Gaussian { gamma } => {
            let d2: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
            math::exp(-gamma * d2)
        }
        KernelSpec::Laplacian { gamma } => {
            let d1: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b).abs()).sum();
            math::exp(-gamma * d1)
        }
        KernelSpec::Polynomial { gamma, degree, .. } => math::powi(gamma * dot(x1, x2) + 1.0, degree),
    })
}

/// Growth function `g` with `‖Φ(x₁) - Φ(x₂)‖ ≤ g(‖x₁ - x₂‖₂)` for inputs in
/// `ℝⁿ` (within the radius bound for polynomial kernels).
pub fn growth_function(spec: &KernelSpec, n: usize, z: f64) -> f64 {
    let z = z.max(0.0);
    match *spec {
        KernelSpec::Linear => z,
        KernelSpec::Gaussian { gamma } => math::sqrt(2.0 * gamma).max(1.0) * z,
        KernelSpec::Laplacian { gamma } => {
            let rn = math::sqrt(n as f64);
            if z <= gamma * rn / 2.0 {
                math::sqrt(2.0 * gamma * z * rn)
            } else {
                z + gamma * rn / 2.0
            }
        }
        KernelSpec::Polynomial { gamma, degree, radius } => polynomial_growth_constant(gamma, degree, radius) * z,
    }
}

/// The constant `max{√(2(γR²+1)^d [- 2(1-γR²)^d])/(2R), 1}` bounds the
/// lifted distance only for inputs about `2R` apart. Near the sphere of
/// radius `R` the feature map stretches distances by
/// `√(dγ(γR²+1)^{d-1} + d(d-1)γ²R²(γR²+1)^{d-2})`, the square root of the
/// largest eigenvalue of `∇ₓ∇ₓ' k` on the diagonal, so the larger of the two
/// is used.
pub fn polynomial_growth_constant(gamma: f64, degree: u32, radius: f64) -> f64 {
    let base = gamma * radius * radius + 1.0;
    let top = 2.0 * math::powi(base, degree);
    let inner = if degree.is_multiple_of(2) { top } else { top - 2.0 * math::powi(1.0 - gamma * radius * radius, degree) };
    let far = math::sqrt(inner.max(0.0)) / (2.0 * radius);
    let d = degree as f64;
    let mut local = d * gamma * math::powi(base, degree - 1);
    if degree >= 2 {
        local += d * (d - 1.0) * gamma * gamma * radius * radius * math::powi(base, degree - 2);
    }
    far.max(math::sqrt(local)).max(1.0)
}

/// Radius of the lifted Wasserstein ball that contains the original one.
pub fn lifted_radius(rho: f64, spec: &KernelSpec, n: usize, task: Task) -> f64 {
    let g = growth_function(spec, n, rho);
    match task {
        Task::Regression => core::f64::consts::SQRT_2 * g,
        Task::Classification => g,
    }
}

pub fn kernel_matrix(dataset: &Dataset, spec: &KernelSpec) -> Result<Matrix> {
    spec.validate()?;
    let n = dataset.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel_eval(spec, dataset.x(i), dataset.x(j))?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelHypothesis {
    pub kernel: KernelSpec,
    pub beta: Vec<f64>,
    pub anchors: Vec<Vec<f64>>,
}

impl KernelHypothesis {
    pub fn new(kernel: KernelSpec, beta: Vec<f64>, anchors: Vec<Vec<f64>>) -> Result<Self> {
        kernel.validate()?;
        if beta.len() != anchors.len() {
            return Err(Error::DimensionMismatch { expected: anchors.len(), found: beta.len() });
        }
        if beta.iter().chain(anchors.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("kernel hypothesis has non-finite entries".into()));
        }
        Ok(Self { kernel, beta, anchors })
    }

    /// RKHS norm `√(βᵀ𝒦β)`.
    pub fn rkhs_norm(&self) -> Result<f64> {
        let mut s = 0.0;
        for (i, a) in self.anchors.iter().enumerate() {
            for (j, b) in self.anchors.iter().enumerate() {
                s += self.beta[i] * self.beta[j] * kernel_eval(&self.kernel, a, b)?;
            }
        }
        Ok(math::sqrt(s.max(0.0)))
    }
}

pub fn kernel_predict(h: &KernelHypothesis, x: &[f64]) -> Result<f64> {
    if let Some(a) = h.anchors.first() {
        if a.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: x.len() });
        }
    }
    let mut s = 0.0;
    for (b, a) in h.beta.iter().zip(&h.anchors) {
        s += b * kernel_eval(&h.kernel, x, a)?;
    }
    Ok(s)
}

/// Kernel matrix, its square root and the pseudo-inverse of the square root.
struct Factored {
    k: Matrix,
    root: Matrix,
    pinv_root: Matrix,
}

fn factor(dataset: &Dataset, spec: &KernelSpec) -> Result<Factored> {
    let k = kernel_matrix(dataset, spec)?;
    let mut jittered = k.clone();
    let shift = JITTER * (1.0 + k.trace() / k.rows().max(1) as f64);
    for i in 0..k.rows() {
        jittered[(i, i)] += shift;
    }
    Ok(Factored { root: sym_eig_sqrt(&jittered)?, pinv_root: sym_eig_pinv_sqrt(&jittered)?, k })
}

fn lifted_dataset(f: &Factored, dataset: &Dataset) -> Result<Dataset> {
    Dataset::new(f.root.clone(), dataset.outputs().to_vec(), dataset.task())
}

fn anchors(dataset: &Dataset) -> Vec<Vec<f64>> {
    (0..dataset.len()).map(|i| dataset.x(i).to_vec()).collect()
}

/// `(1/N) Σ L((𝒦β)ᵢ - ŷᵢ) + ρ·lip(L)·‖(𝒦^{1/2}β, 1)‖₂`.
pub fn kernel_regression_objective(k: &Matrix, root: &Matrix, dataset: &Dataset, loss: &LossSpec, beta: &[f64], rho: f64) -> f64 {
    let fitted = k.matvec(beta);
    let emp = fitted.iter().zip(dataset.outputs()).map(|(f, y)| loss.eval(f - y)).sum::<f64>() / dataset.len() as f64;
    let u = root.matvec(beta);
    emp + rho * loss.lipschitz() * math::hypot(norm2(&u), 1.0)
}

/// Minimizes the kernelized regression objective; `rho` is the radius of the
/// lifted ball (see [`lifted_radius`]).
pub fn train_kernel_regression(dataset: &Dataset, spec: &KernelSpec, loss: &LossSpec, rho: f64) -> Result<(KernelHypothesis, f64)> {
    dataset.require(Task::Regression)?;
    let f = factor(dataset, spec)?;
    let lifted = lifted_dataset(&f, dataset)?;
    let p = RegressionProblem::new(&lifted, loss.clone(), Default::default(), TransportCost::joint(NormP::Two), rho)?;
    let (u, _) = train_lipschitz_regression(&p)?;
    let beta = f.pinv_root.matvec(&u.w);
    let value = kernel_regression_objective(&f.k, &f.root, dataset, loss, &beta, rho);
    Ok((KernelHypothesis::new(*spec, beta, anchors(dataset))?, value))
}

/// Optimal value of the kernelized classification program at fixed `β`.
pub fn kernel_classification_objective(k: &Matrix, root: &Matrix, dataset: &Dataset, loss: &LossSpec, beta: &[f64], rho: f64, kappa: f64) -> f64 {
    let margins: Vec<f64> = k.matvec(beta).iter().zip(dataset.outputs()).map(|(f, y)| f * y).collect();
    let lam0 = loss.lipschitz() * norm2(&root.matvec(beta));
    margin_objective(&margins, loss, lam0, rho, kappa).0
}

/// Minimizes the kernelized classification program over `(β, λ)`; `rho` is
/// the radius of the lifted ball.
pub fn train_kernel_classification(dataset: &Dataset, spec: &KernelSpec, loss: &LossSpec, rho: f64, kappa: f64) -> Result<(KernelHypothesis, f64)> {
    dataset.require(Task::Classification)?;
    let f = factor(dataset, spec)?;
    let lifted = lifted_dataset(&f, dataset)?;
    let p = ClassificationProblem::new(&lifted, loss.clone(), Default::default(), TransportCost::classification(NormP::Two, kappa)?, rho)?;
    let (u, _) = train_lipschitz_classification(&p)?;
    let beta = f.pinv_root.matvec(&u.w);
    let value = kernel_classification_objective(&f.k, &f.root, dataset, loss, &beta, rho, kappa);
    Ok((KernelHypothesis::new(*spec, beta, anchors(dataset))?, value))
}

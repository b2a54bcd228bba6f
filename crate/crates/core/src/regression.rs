//! Distributionally robust linear regression.
//!
//! For piecewise linear losses the worst-case expected loss over the
//! Wasserstein ball is the value of a single LP in which the support function
//! of a polyhedral support set is dualized. For Lipschitz losses on an
//! unbounded support it collapses to the empirical loss plus the
//! regularizer `ρ·lip(L)·‖(w, -1)‖_*`.

use alloc::format;
use alloc::vec::Vec;

use crate::data::{Dataset, Task};
use crate::linalg::dot;
use crate::loss::LossSpec;
use crate::lpform::{add_dual_pair_le, Affine};
use crate::metric::TransportCost;
use crate::norm::NormP;
use crate::solver::{solve_composite, solve_lp, CompositeProblem, LinearProgram, Objective, Sense, SolveOptions};
use crate::support::SupportSet;
use crate::{Error, LinearHypothesis, Result};

#[derive(Debug, Clone)]
pub struct RegressionProblem<'a> {
    pub dataset: &'a Dataset,
    pub loss: LossSpec,
    pub support: SupportSet,
    pub metric: TransportCost,
    pub rho: f64,
}

impl<'a> RegressionProblem<'a> {
    pub fn new(dataset: &'a Dataset, loss: LossSpec, support: SupportSet, metric: TransportCost, rho: f64) -> Result<Self> {
        dataset.require(Task::Regression)?;
        loss.validate()?;
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidParameter("radius must be finite and nonnegative".into()));
        }
        if metric.is_classification() {
            return Err(Error::InvalidParameter("regression needs a regression transport cost".into()));
        }
        if let SupportSet::Polytope(poly) = &support {
            if !poly.has_output() || poly.input_dim() != dataset.dim() {
                return Err(Error::DimensionMismatch { expected: dataset.dim() + 1, found: poly.ambient_dim() });
            }
            for i in 0..dataset.len() {
                if !poly.contains(dataset.x(i), Some(dataset.y(i)), 1e-9) {
                    return Err(Error::InvalidDataset(format!("sample {i} lies outside the support set")));
                }
            }
        }
        Ok(Self { dataset, loss, support, metric, rho })
    }

    /// Unbounded support with the joint p-norm metric.
    pub fn unbounded(dataset: &'a Dataset, loss: LossSpec, p: NormP, rho: f64) -> Result<Self> {
        Self::new(dataset, loss, SupportSet::Unbounded, TransportCost::joint(p), rho)
    }

    pub fn residual(&self, w: &[f64], i: usize) -> f64 {
        dot(w, self.dataset.x(i)) - self.dataset.y(i)
    }
}

/// `(1/N) Σ L(<w, x̂ᵢ> - ŷᵢ)`.
pub fn empirical_loss(dataset: &Dataset, loss: &LossSpec, w: &[f64]) -> f64 {
    let n = dataset.len() as f64;
    (0..dataset.len()).map(|i| loss.eval(dot(w, dataset.x(i)) - dataset.y(i))).sum::<f64>() / n
}

/// Empirical loss plus `ρ·lip(L)·‖(w, -1)‖_*`.
///
/// For the separable cost with κ = ∞ the dual norm reduces to `‖w‖_*`, which
/// gives the classical regularized form with weight `c = ρ·lip(L)`.
pub fn regularized_objective(dataset: &Dataset, loss: &LossSpec, w: &[f64], rho: f64, metric: &TransportCost) -> f64 {
    empirical_loss(dataset, loss, w) + rho * loss.lipschitz() * metric.regression_dual(w)
}

fn lp_capable(p: &RegressionProblem<'_>) -> bool {
    p.loss.is_pwl() && p.metric.input_norm != NormP::Two
}

/// Builds the worst-case LP. With `fixed_w` the weights are pinned and the
/// LP evaluates the worst-case expected loss of that hypothesis.
fn build_lp(p: &RegressionProblem<'_>, fixed_w: Option<&[f64]>) -> Result<(LinearProgram, Vec<usize>)> {
    let pieces = p.loss.pwl_pieces()?;
    let data = p.dataset;
    let (n, big_n) = (data.dim(), data.len());
    let mut lp = LinearProgram::new(Sense::Minimize);
    let w: Vec<usize> = (0..n)
        .map(|k| match fixed_w {
            Some(v) => lp.add_var(format!("w[{k}]"), 0.0, v[k], v[k]),
            None => lp.add_free(format!("w[{k}]"), 0.0),
        })
        .collect();
    let lambda = lp.add_nonneg("lambda", p.rho);
    let s: Vec<usize> = (0..big_n).map(|i| lp.add_free(format!("s[{i}]"), 1.0 / big_n as f64)).collect();

    match &p.support {
        SupportSet::Unbounded => {
            for (j, (a, b)) in pieces.iter().enumerate() {
                for i in 0..big_n {
                    // a(<w, x̂> - ŷ) + b ≤ s
                    let mut row: Vec<(usize, f64)> = (0..n).map(|k| (w[k], a * data.x(i)[k])).collect();
                    row.push((s[i], -1.0));
                    lp.add_le(row, a * data.y(i) - b);
                }
                let u: Vec<Affine> = (0..n).map(|k| Affine::default().term(w[k], *a)).collect();
                add_dual_pair_le(&mut lp, &p.metric, &u, &Affine::constant(-a), lambda, &format!("c{j}"))?;
            }
        }
        SupportSet::Polytope(poly) => {
            let m = poly.num_constraints();
            for i in 0..big_n {
                let (x, y) = (data.x(i), data.y(i));
                let mut point = x.to_vec();
                point.push(y);
                let slack = poly.slack(&point);
                for (j, (a, b)) in pieces.iter().enumerate() {
                    let gamma: Vec<usize> = (0..m).map(|l| lp.add_nonneg(format!("g[{i},{j},{l}]"), 0.0)).collect();
                    let mut row: Vec<(usize, f64)> = (0..n).map(|k| (w[k], a * x[k])).collect();
                    row.extend(gamma.iter().zip(&slack).map(|(g, sl)| (*g, *sl)));
                    row.push((s[i], -1.0));
                    lp.add_le(row, a * y - b);
                    // ‖(a w - C1ᵀγ, -a - c2ᵀγ)‖_* ≤ λ
                    let u: Vec<Affine> = (0..n)
                        .map(|k| {
                            let mut e = Affine::default().term(w[k], *a);
                            for (l, g) in gamma.iter().enumerate() {
                                e = e.term(*g, -poly.c_x()[(l, k)]);
                            }
                            e
                        })
                        .collect();
                    let mut v = Affine::constant(-a);
                    for (l, g) in gamma.iter().enumerate() {
                        v = v.term(*g, -poly.c_y(l));
                    }
                    add_dual_pair_le(&mut lp, &p.metric, &u, &v, lambda, &format!("c{i},{j}"))?;
                }
            }
        }
    }
    Ok((lp, w))
}

fn check_lp_route(p: &RegressionProblem<'_>) -> Result<()> {
    if !p.loss.is_pwl() {
        return Err(Error::NotPwl);
    }
    if p.metric.input_norm == NormP::Two && !p.support.is_unbounded() {
        return Err(Error::UnsupportedNorm(NormP::Two));
    }
    Ok(())
}

/// Trains a piecewise linear loss by solving the worst-case LP.
///
/// With an unbounded support and the 2-norm the dual-norm constraint is not
/// polyhedral; that case goes through [`train_lipschitz_regression`].
pub fn train_pwl_regression(p: &RegressionProblem<'_>) -> Result<(LinearHypothesis, f64)> {
    check_lp_route(p)?;
    if !lp_capable(p) {
        return train_lipschitz_regression(p);
    }
    let (lp, w) = build_lp(p, None)?;
    let sol = solve_lp(&lp, &SolveOptions::default())?.into_optimal()?;
    let wv: Vec<f64> = w.iter().map(|&k| sol.primal[k]).collect();
    Ok((LinearHypothesis::new(wv)?, sol.value))
}

/// ε-insensitive loss through the worst-case LP.
pub fn train_svr(p: &RegressionProblem<'_>) -> Result<(LinearHypothesis, f64)> {
    if !matches!(p.loss, LossSpec::EpsInsensitive { .. }) {
        return Err(Error::InvalidParameter("support vector regression needs the epsilon-insensitive loss".into()));
    }
    train_pwl_regression(p)
}

/// Pinball loss through the worst-case LP.
pub fn train_quantile(p: &RegressionProblem<'_>) -> Result<(LinearHypothesis, f64)> {
    if !matches!(p.loss, LossSpec::Pinball { .. }) {
        return Err(Error::InvalidParameter("quantile regression needs the pinball loss".into()));
    }
    train_pwl_regression(p)
}

struct LipschitzObjective<'a> {
    p: &'a RegressionProblem<'a>,
}

impl Objective for LipschitzObjective<'_> {
    fn dim(&self) -> usize {
        self.p.dataset.dim()
    }

    fn eval(&self, w: &[f64], g: &mut [f64]) -> f64 {
        let data = self.p.dataset;
        let inv_n = 1.0 / data.len() as f64;
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut val = 0.0;
        for i in 0..data.len() {
            let r = self.p.residual(w, i);
            val += self.p.loss.eval(r);
            let d = self.p.loss.subgradient(r) * inv_n;
            for (gk, xk) in g.iter_mut().zip(data.x(i)) {
                *gk += d * xk;
            }
        }
        let reg = self.p.rho * self.p.loss.lipschitz();
        if reg > 0.0 {
            let (dir, _) = self.p.metric.dual_pair_maximizer(w, -1.0);
            for (gk, dk) in g.iter_mut().zip(&dir) {
                *gk += reg * dk;
            }
        }
        val * inv_n + reg * self.p.metric.regression_dual(w)
    }
}

/// Minimizes `(1/N) Σ L(<w, x̂ᵢ> - ŷᵢ) + ρ·lip(L)·‖(w, -1)‖_*` for a Lipschitz
/// loss on an unbounded support.
pub fn train_lipschitz_regression(p: &RegressionProblem<'_>) -> Result<(LinearHypothesis, f64)> {
    if !p.support.is_unbounded() {
        return Err(Error::BoundedSupportUnsupported);
    }
    let obj = LipschitzObjective { p };
    let sol = solve_composite(
        &CompositeProblem { objective: &obj, coupling: None, start: None },
        &SolveOptions::default(),
    );
    let value = regularized_objective(p.dataset, &p.loss, &sol.x, p.rho, &p.metric);
    Ok((LinearHypothesis::new(sol.x)?, value))
}

struct HuberSplit<'a> {
    data: &'a Dataset,
    delta: f64,
    rho: f64,
    metric: TransportCost,
}

impl Objective for HuberSplit<'_> {
    fn dim(&self) -> usize {
        self.data.dim() + self.data.len()
    }

    // x = (w, z): (1/N) Σ ½ zᵢ² + δ|<w, x̂ᵢ> - ŷᵢ - zᵢ| + ρδ‖(w, -1)‖_*
    fn eval(&self, x: &[f64], g: &mut [f64]) -> f64 {
        let n = self.data.dim();
        let inv_n = 1.0 / self.data.len() as f64;
        let (w, z) = x.split_at(n);
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut val = 0.0;
        for i in 0..self.data.len() {
            let r = dot(w, self.data.x(i)) - self.data.y(i) - z[i];
            val += 0.5 * z[i] * z[i] + self.delta * r.abs();
            let s = self.delta * r.signum() * inv_n;
            for (gk, xk) in g[..n].iter_mut().zip(self.data.x(i)) {
                *gk += s * xk;
            }
            g[n + i] = z[i] * inv_n - s;
        }
        let reg = self.rho * self.delta;
        if reg > 0.0 {
            let (dir, _) = self.metric.dual_pair_maximizer(w, -1.0);
            for (gk, dk) in g[..n].iter_mut().zip(&dir) {
                *gk += reg * dk;
            }
        }
        val * inv_n + reg * self.metric.regression_dual(w)
    }
}

/// Huber regression through its inf-convolution form with auxiliary
/// variables `zᵢ` splitting each residual into a quadratic and a linear part.
pub fn train_huber(dataset: &Dataset, delta: f64, rho: f64, p: NormP) -> Result<(LinearHypothesis, f64)> {
    let prob = RegressionProblem::unbounded(dataset, LossSpec::huber(delta)?, p, rho)?;
    let obj = HuberSplit { data: dataset, delta, rho, metric: prob.metric };
    let sol = solve_composite(
        &CompositeProblem { objective: &obj, coupling: None, start: None },
        &SolveOptions::default(),
    );
    let w = sol.x[..dataset.dim()].to_vec();
    Ok((LinearHypothesis::new(w)?, sol.value))
}

/// Worst-case expected loss of a fixed hypothesis over the Wasserstein ball.
pub fn wc_expected_loss_regression(p: &RegressionProblem<'_>, w: &LinearHypothesis) -> Result<f64> {
    p.dataset.check_dim(w.dim())?;
    if p.support.is_unbounded() {
        // closed form: the supremum over each sample is finite exactly when
        // λ ≥ lip(L)‖(w, -1)‖_*, and then equals the empirical loss
        return Ok(regularized_objective(p.dataset, &p.loss, &w.w, p.rho, &p.metric));
    }
    check_lp_route(p)?;
    let (lp, _) = build_lp(p, Some(&w.w))?;
    Ok(solve_lp(&lp, &SolveOptions::default())?.into_optimal()?.value)
}

/// Worst-case expected loss computed through the LP even when a closed form
/// exists (unbounded support, p ∈ {1, ∞}).
pub fn wc_expected_loss_regression_lp(p: &RegressionProblem<'_>, w: &LinearHypothesis) -> Result<f64> {
    p.dataset.check_dim(w.dim())?;
    check_lp_route(p)?;
    if !lp_capable(p) {
        return Err(Error::UnsupportedNorm(NormP::Two));
    }
    let (lp, _) = build_lp(p, Some(&w.w))?;
    Ok(solve_lp(&lp, &SolveOptions::default())?.into_optimal()?.value)
}

/// The worst-case LP of a problem, for inspection or export.
pub fn reformulation_lp(p: &RegressionProblem<'_>, fixed_w: Option<&LinearHypothesis>) -> Result<LinearProgram> {
    check_lp_route(p)?;
    Ok(build_lp(p, fixed_w.map(|w| w.w.as_slice()))?.0)
}

/// Whether some sample activates the steepest slope of the loss at `w`.
pub fn check_min_dispersion(dataset: &Dataset, loss: &LossSpec, w: &LinearHypothesis) -> bool {
    (0..dataset.len()).any(|i| loss.attains_lipschitz_slope(dot(&w.w, dataset.x(i)) - dataset.y(i)))
}

/// Robust loss: every sample may be perturbed, with average perturbation
/// size at most ρ.
///
/// Each perturbed loss `φᵢ(t) = max_{‖Δ‖ ≤ t} L(rᵢ + <(w, -1), Δ>)` is convex
/// in the budget t, so the maximum over the budget simplex sits at a vertex:
/// the whole budget `Nρ` goes to a single sample.
pub fn robust_loss_regression(dataset: &Dataset, loss: &LossSpec, w: &LinearHypothesis, rho: f64, metric: &TransportCost) -> Result<f64> {
    dataset.check_dim(w.dim())?;
    loss.pwl_pieces()?;
    let big_n = dataset.len() as f64;
    let reach = rho * big_n * metric.regression_dual(&w.w);
    let residuals: Vec<f64> = (0..dataset.len()).map(|i| dot(&w.w, dataset.x(i)) - dataset.y(i)).collect();
    let base: f64 = residuals.iter().map(|r| loss.eval(*r)).sum();
    let gain = residuals
        .iter()
        .map(|r| loss.eval(r + reach).max(loss.eval(r - reach)) - loss.eval(*r))
        .fold(0.0, f64::max);
    Ok((base + gain) / big_n)
}

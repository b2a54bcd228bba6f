//! Distributionally robust linear classification with labels in {-1, +1}.
//!
//! The transport cost charges `‖x - x'‖` for moving inputs and κ for flipping
//! a label. Piecewise linear losses lead to an LP with one constraint family
//! for kept labels and one for flipped labels; Lipschitz losses on an
//! unbounded input space lead to
//!
//! `min λρ + (1/N) Σ max{L(mᵢ), L(-mᵢ) - κλ}  s.t.  λ ≥ lip(L)‖w‖_*`
//!
//! with margins `mᵢ = ŷᵢ<w, x̂ᵢ>`.

use alloc::format;
use alloc::vec::Vec;

use crate::data::{Dataset, Task};
use crate::linalg::dot;
use crate::loss::LossSpec;
use crate::lpform::{add_norm_le, Affine};
use crate::metric::TransportCost;
use crate::norm::NormP;
use crate::solver::{
    solve_composite, solve_lp, CompositeProblem, Coupling, LinearProgram, Objective, Sense, SolveOptions,
};
use crate::support::SupportSet;
use crate::{Error, LinearHypothesis, Result};

#[derive(Debug, Clone)]
pub struct ClassificationProblem<'a> {
    pub dataset: &'a Dataset,
    pub loss: LossSpec,
    pub support: SupportSet,
    pub metric: TransportCost,
    pub rho: f64,
}

impl<'a> ClassificationProblem<'a> {
    pub fn new(dataset: &'a Dataset, loss: LossSpec, support: SupportSet, metric: TransportCost, rho: f64) -> Result<Self> {
        dataset.require(Task::Classification)?;
        loss.validate()?;
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidParameter("radius must be finite and nonnegative".into()));
        }
        if !metric.is_classification() {
            return Err(Error::InvalidParameter("classification needs the label-flip transport cost".into()));
        }
        if let SupportSet::Polytope(poly) = &support {
            if poly.has_output() || poly.input_dim() != dataset.dim() {
                return Err(Error::DimensionMismatch { expected: dataset.dim(), found: poly.ambient_dim() });
            }
            for i in 0..dataset.len() {
                if !poly.contains(dataset.x(i), None, 1e-9) {
                    return Err(Error::InvalidDataset(format!("sample {i} lies outside the input support")));
                }
            }
        }
        Ok(Self { dataset, loss, support, metric, rho })
    }

    /// Unbounded input space with the p-norm on inputs and flip cost κ.
    pub fn unbounded(dataset: &'a Dataset, loss: LossSpec, p: NormP, kappa: f64, rho: f64) -> Result<Self> {
        Self::new(dataset, loss, SupportSet::Unbounded, TransportCost::classification(p, kappa)?, rho)
    }

    pub fn kappa(&self) -> f64 {
        self.metric.kappa().unwrap_or(f64::INFINITY)
    }

    pub fn margin(&self, w: &[f64], i: usize) -> f64 {
        self.dataset.y(i) * dot(w, self.dataset.x(i))
    }
}

/// `(1/N) Σ L(ŷᵢ<w, x̂ᵢ>)`.
pub fn empirical_loss(dataset: &Dataset, loss: &LossSpec, w: &[f64]) -> f64 {
    let n = dataset.len() as f64;
    (0..dataset.len()).map(|i| loss.eval(dataset.y(i) * dot(w, dataset.x(i)))).sum::<f64>() / n
}

/// Empirical loss plus `ρ·lip(L)·‖w‖_*`, the κ = ∞ collapse.
pub fn regularized_objective(dataset: &Dataset, loss: &LossSpec, w: &[f64], rho: f64, p: NormP) -> f64 {
    empirical_loss(dataset, loss, w) + rho * loss.lipschitz() * p.dual_norm(w)
}

/// Minimum over λ ≥ lip(L)‖w‖_* of `λρ + (1/N) Σ max{L(mᵢ), L(-mᵢ) - κλ}`.
///
/// The function is convex and piecewise linear in λ, so it suffices to
/// inspect the lower end and every breakpoint.
pub fn lipschitz_objective_at(dataset: &Dataset, loss: &LossSpec, w: &[f64], rho: f64, kappa: f64, p: NormP) -> (f64, f64) {
    let margins: Vec<f64> = (0..dataset.len()).map(|i| dataset.y(i) * dot(w, dataset.x(i))).collect();
    margin_objective(&margins, loss, loss.lipschitz() * p.dual_norm(w), rho, kappa)
}

/// Minimum over λ ≥ `lam0` of `λρ + (1/N) Σ max{L(mᵢ), L(-mᵢ) - κλ}` for
/// given margins.
pub(crate) fn margin_objective(margins: &[f64], loss: &LossSpec, lam0: f64, rho: f64, kappa: f64) -> (f64, f64) {
    let n = margins.len() as f64;
    let pairs: Vec<(f64, f64)> = margins.iter().map(|m| (loss.eval(*m), loss.eval(-m))).collect();
    let at = |lam: f64| {
        let tail: f64 = pairs
            .iter()
            .map(|(a, b)| if kappa.is_finite() { a.max(b - kappa * lam) } else { *a })
            .sum();
        lam * rho + tail / n
    };
    let mut best = (at(lam0), lam0);
    if kappa.is_finite() {
        for (a, b) in &pairs {
            let lam = (b - a) / kappa;
            if lam > lam0 {
                let v = at(lam);
                if v < best.0 {
                    best = (v, lam);
                }
            }
        }
    }
    best
}

fn check_lp_route(p: &ClassificationProblem<'_>) -> Result<()> {
    if !p.loss.is_pwl() {
        return Err(Error::NotPwl);
    }
    if p.metric.input_norm == NormP::Two && !p.support.is_unbounded() {
        return Err(Error::UnsupportedNorm(NormP::Two));
    }
    Ok(())
}

fn build_lp(p: &ClassificationProblem<'_>, fixed_w: Option<&[f64]>) -> Result<(LinearProgram, Vec<usize>)> {
    let pieces = p.loss.pwl_pieces()?;
    let data = p.dataset;
    let (n, big_n) = (data.dim(), data.len());
    let kappa = p.kappa();
    let q = p.metric.input_norm;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let w: Vec<usize> = (0..n)
        .map(|k| match fixed_w {
            Some(v) => lp.add_var(format!("w[{k}]"), 0.0, v[k], v[k]),
            None => lp.add_free(format!("w[{k}]"), 0.0),
        })
        .collect();
    let lambda = lp.add_nonneg("lambda", p.rho);
    let s: Vec<usize> = (0..big_n).map(|i| lp.add_free(format!("s[{i}]"), 1.0 / big_n as f64)).collect();
    // sign +1: label kept, -1: label flipped
    let signs: &[f64] = if kappa.is_finite() { &[1.0, -1.0] } else { &[1.0] };

    match &p.support {
        SupportSet::Unbounded => {
            for (j, (a, b)) in pieces.iter().enumerate() {
                for i in 0..big_n {
                    let y = data.y(i);
                    for &sg in signs {
                        let mut row: Vec<(usize, f64)> = (0..n).map(|k| (w[k], sg * a * y * data.x(i)[k])).collect();
                        row.push((s[i], -1.0));
                        if sg < 0.0 {
                            row.push((lambda, -kappa));
                        }
                        lp.add_le(row, -b);
                    }
                }
                // ‖±a ŷ w‖_* is the same for both labels and every sample
                let u: Vec<Affine> = (0..n).map(|k| Affine::default().term(w[k], *a)).collect();
                add_norm_le(&mut lp, q, &u, lambda, 1.0, &format!("c{j}"))?;
            }
        }
        SupportSet::Polytope(poly) => {
            let m = poly.num_constraints();
            for i in 0..big_n {
                let (x, y) = (data.x(i), data.y(i));
                let slack = poly.slack(x);
                for (j, (a, b)) in pieces.iter().enumerate() {
                    for &sg in signs {
                        let tag = if sg > 0.0 { "p" } else { "m" };
                        let gamma: Vec<usize> =
                            (0..m).map(|l| lp.add_nonneg(format!("g{tag}[{i},{j},{l}]"), 0.0)).collect();
                        let mut row: Vec<(usize, f64)> = (0..n).map(|k| (w[k], sg * a * y * x[k])).collect();
                        row.extend(gamma.iter().zip(&slack).map(|(g, sl)| (*g, *sl)));
                        row.push((s[i], -1.0));
                        if sg < 0.0 {
                            row.push((lambda, -kappa));
                        }
                        lp.add_le(row, -b);
                        // ‖±a ŷ w - Cᵀγ‖_* ≤ λ
                        let u: Vec<Affine> = (0..n)
                            .map(|k| {
                                let mut e = Affine::default().term(w[k], sg * a * y);
                                for (l, g) in gamma.iter().enumerate() {
                                    e = e.term(*g, -poly.c_x()[(l, k)]);
                                }
                                e
                            })
                            .collect();
                        add_norm_le(&mut lp, q, &u, lambda, 1.0, &format!("c{tag}{i},{j}"))?;
                    }
                }
            }
        }
    }
    Ok((lp, w))
}

/// Trains a piecewise linear loss by solving the worst-case LP. Hinge loss
/// gives the distributionally robust support vector machine.
pub fn train_pwl_classification(p: &ClassificationProblem<'_>) -> Result<(LinearHypothesis, f64)> {
    check_lp_route(p)?;
    if p.metric.input_norm == NormP::Two {
        return train_lipschitz_classification(p);
    }
    let (lp, w) = build_lp(p, None)?;
    let sol = solve_lp(&lp, &SolveOptions::default())?.into_optimal()?;
    let wv: Vec<f64> = w.iter().map(|&k| sol.primal[k]).collect();
    Ok((LinearHypothesis::new(wv)?, sol.value))
}

struct LipschitzObjective<'a> {
    p: &'a ClassificationProblem<'a>,
}

impl Objective for LipschitzObjective<'_> {
    fn dim(&self) -> usize {
        self.p.dataset.dim() + 1
    }

    // x = (w, λ)
    fn eval(&self, x: &[f64], g: &mut [f64]) -> f64 {
        let data = self.p.dataset;
        let n = data.dim();
        let (w, lam) = (&x[..n], x[n]);
        let kappa = self.p.kappa();
        let inv_n = 1.0 / data.len() as f64;
        g.iter_mut().for_each(|v| *v = 0.0);
        g[n] = self.p.rho;
        let mut val = lam * self.p.rho;
        for i in 0..data.len() {
            let y = data.y(i);
            let m = y * dot(w, data.x(i));
            let kept = self.p.loss.eval(m);
            let flipped = if kappa.is_finite() { self.p.loss.eval(-m) - kappa * lam } else { f64::NEG_INFINITY };
            let coef = if kept >= flipped {
                val += kept * inv_n;
                self.p.loss.subgradient(m) * y
            } else {
                val += flipped * inv_n;
                g[n] -= kappa * inv_n;
                -self.p.loss.subgradient(-m) * y
            };
            for (gk, xk) in g[..n].iter_mut().zip(data.x(i)) {
                *gk += coef * inv_n * xk;
            }
        }
        val
    }
}

/// Minimizes the Lipschitz-loss reformulation over `(w, λ)`; handles the
/// smooth hinge and logistic losses as well as piecewise linear ones.
pub fn train_lipschitz_classification(p: &ClassificationProblem<'_>) -> Result<(LinearHypothesis, f64)> {
    if !p.support.is_unbounded() {
        return Err(Error::BoundedSupportUnsupported);
    }
    let n = p.dataset.dim();
    let obj = LipschitzObjective { p };
    let coupling = Coupling { w_len: n, scale: p.loss.lipschitz(), norm: p.metric.input_norm.dual() };
    let sol = solve_composite(
        &CompositeProblem { objective: &obj, coupling: Some(coupling), start: None },
        &SolveOptions::default(),
    );
    let w = sol.x[..n].to_vec();
    let (value, _) = lipschitz_objective_at(p.dataset, &p.loss, &w, p.rho, p.kappa(), p.metric.input_norm);
    Ok((LinearHypothesis::new(w)?, value))
}

/// Worst-case expected loss of a fixed hypothesis.
pub fn wc_expected_loss_classification(p: &ClassificationProblem<'_>, w: &LinearHypothesis) -> Result<f64> {
    p.dataset.check_dim(w.dim())?;
    if p.support.is_unbounded() {
        return Ok(lipschitz_objective_at(p.dataset, &p.loss, &w.w, p.rho, p.kappa(), p.metric.input_norm).0);
    }
    check_lp_route(p)?;
    let (lp, _) = build_lp(p, Some(&w.w))?;
    Ok(solve_lp(&lp, &SolveOptions::default())?.into_optimal()?.value)
}

/// Worst-case expected loss through the LP even on unbounded input spaces.
pub fn wc_expected_loss_classification_lp(p: &ClassificationProblem<'_>, w: &LinearHypothesis) -> Result<f64> {
    p.dataset.check_dim(w.dim())?;
    check_lp_route(p)?;
    if p.metric.input_norm == NormP::Two {
        return Err(Error::UnsupportedNorm(NormP::Two));
    }
    let (lp, _) = build_lp(p, Some(&w.w))?;
    Ok(solve_lp(&lp, &SolveOptions::default())?.into_optimal()?.value)
}

/// The worst-case LP of a problem, for inspection or export.
pub fn reformulation_lp(p: &ClassificationProblem<'_>, fixed_w: Option<&LinearHypothesis>) -> Result<LinearProgram> {
    check_lp_route(p)?;
    Ok(build_lp(p, fixed_w.map(|w| w.w.as_slice()))?.0)
}

/// Whether some sample activates the steepest slope of the loss at `w`.
pub fn check_non_separability(dataset: &Dataset, loss: &LossSpec, w: &LinearHypothesis) -> bool {
    (0..dataset.len()).any(|i| loss.attains_lipschitz_slope(dataset.y(i) * dot(&w.w, dataset.x(i))))
}

/// Robust loss with input perturbations of average size at most ρ and no
/// label flips. As in regression the budget is spent on a single sample.
pub fn robust_loss_classification(dataset: &Dataset, loss: &LossSpec, w: &LinearHypothesis, rho: f64, p: NormP) -> Result<f64> {
    dataset.check_dim(w.dim())?;
    loss.pwl_pieces()?;
    let big_n = dataset.len() as f64;
    let reach = rho * big_n * p.dual_norm(&w.w);
    let margins: Vec<f64> = (0..dataset.len()).map(|i| dataset.y(i) * dot(&w.w, dataset.x(i))).collect();
    let base: f64 = margins.iter().map(|m| loss.eval(*m)).sum();
    let gain = margins
        .iter()
        .map(|m| loss.eval(m + reach).max(loss.eval(m - reach)) - loss.eval(*m))
        .fold(0.0, f64::max);
    Ok((base + gain) / big_n)
}

/// `sign(<w, x>)` with `sign(0) = +1`.
pub fn predict(w: &LinearHypothesis, x: &[f64]) -> Result<f64> {
    if x.len() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), found: x.len() });
    }
    Ok(if w.eval(x) >= 0.0 { 1.0 } else { -1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn predict_tie_break() {
        let w = LinearHypothesis::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(predict(&w, &[2.0, 5.0]).unwrap(), 1.0);
        assert_eq!(predict(&w, &[0.0, 5.0]).unwrap(), 1.0);
        let w = LinearHypothesis::new(vec![-1.0, 1.0]).unwrap();
        assert_eq!(predict(&w, &[3.0, 1.0]).unwrap(), -1.0);
        assert!(predict(&w, &[1.0]).is_err());
    }

    #[test]
    fn hinge_single_sample_closed_form() {
        let d = Dataset::from_rows(&[[1.0]], &[1.0], Task::Classification).unwrap();
        let p = ClassificationProblem::unbounded(&d, LossSpec::Hinge, NormP::Two, f64::INFINITY, 0.1).unwrap();
        let v = wc_expected_loss_classification(&p, &LinearHypothesis::new(vec![0.5]).unwrap()).unwrap();
        assert!((v - 0.55).abs() < 1e-12);
    }

    #[test]
    fn lp_and_closed_form_agree() {
        let d = Dataset::from_rows(&[[1.0, 0.2], [-0.5, 1.0], [0.3, -0.7]], &[1.0, -1.0, -1.0], Task::Classification).unwrap();
        let w = LinearHypothesis::new(vec![0.8, -0.4]).unwrap();
        for kappa in [0.25, 1.0, f64::INFINITY] {
            for p in [NormP::One, NormP::Inf] {
                let prob = ClassificationProblem::unbounded(&d, LossSpec::Hinge, p, kappa, 0.3).unwrap();
                let a = wc_expected_loss_classification_lp(&prob, &w).unwrap();
                let b = wc_expected_loss_classification(&prob, &w).unwrap();
                assert!((a - b).abs() < 1e-9, "κ={kappa} p={p}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn non_separability() {
        let d = Dataset::from_rows(&[[2.0], [-2.0]], &[1.0, -1.0], Task::Classification).unwrap();
        let w = LinearHypothesis::new(vec![1.0]).unwrap();
        assert!(!check_non_separability(&d, &LossSpec::Hinge, &w));
        let w = LinearHypothesis::new(vec![-1.0]).unwrap();
        assert!(check_non_separability(&d, &LossSpec::Hinge, &w));
        assert!(!check_non_separability(&d, &LossSpec::Logloss, &w));
    }

    #[test]
    fn lipschitz_route_matches_lp_for_hinge() {
        let d = Dataset::from_rows(&[[1.0, 0.5], [-1.0, 0.3], [0.2, -1.0], [0.8, 0.9]], &[1.0, -1.0, -1.0, 1.0], Task::Classification)
            .unwrap();
        let prob = ClassificationProblem::unbounded(&d, LossSpec::Hinge, NormP::Inf, 0.5, 0.2).unwrap();
        let (_, lp) = train_pwl_classification(&prob).unwrap();
        let (_, comp) = train_lipschitz_classification(&prob).unwrap();
        assert!((lp - comp).abs() <= 1e-5 * (1.0 + lp.abs()), "{lp} vs {comp}");
    }
}

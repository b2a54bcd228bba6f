//! Radii that make the Wasserstein ball a confidence region for the data
//! generating distribution, and out-of-sample error and risk intervals for a
//! fixed hypothesis.
//!
//! The light-tail constants have no closed form; they are explicit inputs
//! with defaults chosen only to make the formulas well posed.

use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{Dataset, Task};
use crate::linalg::dot;
use crate::math;
use crate::norm::NormP;
use crate::solver::{solve_lp, LinearProgram, Sense, SolveOptions};
use crate::{Error, LinearHypothesis, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LightTailParams {
    pub a: f64,
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub big_a: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl Default for LightTailParams {
    fn default() -> Self {
        let e = core::f64::consts::E;
        Self { a: 2.0, big_a: e, c1: e, c2: 1.0, c3: e, c4: 1.0 }
    }
}

impl LightTailParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.a > 1.0 && self.big_a > 0.0 && self.c1 >= 1.0 && self.c2 > 0.0 && self.c3 >= 1.0 && self.c4 > 0.0;
        let finite = [self.a, self.big_a, self.c1, self.c2, self.c3, self.c4].iter().all(|v| v.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!("invalid light-tail constants {self:?}")))
        }
    }
}

/// Bounds `Ω̲‖w‖ ≤ …≤ Ω̄` on the hypothesis space and `M_n`, the largest dual
/// norm of a standard basis vector.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HypothesisBox {
    pub omega_lower: f64,
    pub omega_upper: f64,
    pub m_n: f64,
}

impl HypothesisBox {
    pub fn new(omega_lower: f64, omega_upper: f64, m_n: f64) -> Result<Self> {
        if !(omega_lower > 0.0 && omega_upper >= 0.0 && omega_lower.is_finite() && omega_upper.is_finite() && m_n.is_finite()) {
            return Err(Error::InvalidParameter("hypothesis box needs Ω̲ > 0 and finite Ω̄, M_n".into()));
        }
        Ok(Self { omega_lower, omega_upper, m_n })
    }

    /// `M_n` for a dual norm of the given exponent: every basis vector has
    /// unit norm in any p-norm.
    pub fn unit_basis(omega_lower: f64, omega_upper: f64) -> Result<Self> {
        Self::new(omega_lower, omega_upper, 1.0)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("significance level {eta} outside (0, 1]")))
    }
}

/// Radius `ρ_N(η)` from measure concentration for light-tailed
/// distributions on `ℝ^{n+1}` (or `ℝⁿ × {±1}`).
pub fn radius_basic(n_samples: usize, dim: usize, eta: f64, params: &LightTailParams) -> Result<f64> {
    params.validate()?;
    check_eta(eta)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    if dim == 1 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let nf = n_samples as f64;
    let log_term = math::ln(params.c1 / eta);
    let base = log_term / (params.c2 * nf);
    let exponent = if nf >= log_term / params.c2 { 1.0 / ((dim + 1).max(2) as f64) } else { 1.0 / params.a };
    Ok(math::powf(base, exponent))
}

/// Smallest sample size for which the improved radius is valid.
pub fn improved_sample_threshold(dim: usize, eta: f64, params: &LightTailParams) -> f64 {
    let a = 16.0 * dim as f64 / params.c4;
    (a * a).max(16.0 * math::ln(params.c3 / eta) / params.c4)
}

/// The improved radius `ρ'_N(η)` and whether `N` meets the sample-size
/// threshold.
pub fn radius_improved_formula(n_samples: usize, dim: usize, eta: f64, params: &LightTailParams, bx: &HypothesisBox) -> (f64, bool) {
    let nf = n_samples as f64;
    let d = dim as f64;
    let root = math::sqrt((d * math::ln(math::sqrt(nf)) + math::ln(params.c3 / eta)) / params.c4);
    let value = 2.0 * bx.omega_upper / (math::sqrt(nf) * bx.omega_lower) * (bx.m_n * d * params.big_a + root);
    (value, nf >= improved_sample_threshold(dim, eta, params))
}

/// Dimension-free radius `ρ'_N(η)`; fails below the sample-size threshold.
pub fn radius_improved(n_samples: usize, dim: usize, eta: f64, params: &LightTailParams, bx: &HypothesisBox) -> Result<f64> {
    params.validate()?;
    check_eta(eta)?;
    let (value, ok) = radius_improved_formula(n_samples, dim, eta, params, bx);
    if !ok {
        let required = math::ceil(improved_sample_threshold(dim, eta, params));
        return Err(Error::SampleSizeTooSmall { required });
    }
    Ok(value)
}

/// Best- and worst-case mean absolute prediction error over the ball with
/// joint p-norm transport cost.
pub fn error_interval(dataset: &Dataset, w: &LinearHypothesis, rho: f64, p: NormP) -> Result<(f64, f64)> {
    dataset.require(Task::Regression)?;
    dataset.check_dim(w.dim())?;
    check_rho(rho)?;
    let mae = (0..dataset.len()).map(|i| (dataset.y(i) - dot(&w.w, dataset.x(i))).abs()).sum::<f64>() / dataset.len() as f64;
    let mut ext: Vec<f64> = w.w.clone();
    ext.push(-1.0);
    let width = rho * p.dual_norm(&ext);
    Ok(((mae - width).max(0.0), mae + width))
}

fn check_rho(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("radius {rho} must be finite and non-negative")))
    }
}

/// `min λρ + (1/N)Σ sᵢ` with rows `1 - sign·rᵢmᵢ ≤ sᵢ`,
/// `1 + sign·tᵢmᵢ - κλ ≤ sᵢ`, `rᵢ‖w‖_*, tᵢ‖w‖_* ≤ λ`.
fn risk_lp(margins: &[f64], dual: f64, rho: f64, kappa: f64, sign: f64) -> Result<f64> {
    let nf = margins.len() as f64;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let lam = lp.add_nonneg("lambda", rho);
    for (i, m) in margins.iter().enumerate() {
        let s = lp.add_nonneg(alloc::format!("s[{i}]"), 1.0 / nf);
        let r = lp.add_nonneg(alloc::format!("r[{i}]"), 0.0);
        lp.add_le([(r, -sign * m), (s, -1.0)], -1.0);
        lp.add_le([(r, dual), (lam, -1.0)], 0.0);
        if kappa.is_finite() {
            let t = lp.add_nonneg(alloc::format!("t[{i}]"), 0.0);
            lp.add_le([(t, sign * m), (lam, -kappa), (s, -1.0)], -1.0);
            lp.add_le([(t, dual), (lam, -1.0)], 0.0);
        }
    }
    Ok(solve_lp(&lp, &SolveOptions::default())?.into_optimal()?.value)
}

/// Best- and worst-case misclassification probability over the ball.
/// A zero margin counts as a misclassification.
pub fn risk_interval(dataset: &Dataset, w: &LinearHypothesis, rho: f64, kappa: f64, p: NormP) -> Result<(f64, f64)> {
    dataset.require(Task::Classification)?;
    dataset.check_dim(w.dim())?;
    check_rho(rho)?;
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("flip cost {kappa} must be positive")));
    }
    let margins: Vec<f64> = (0..dataset.len()).map(|i| dataset.y(i) * dot(&w.w, dataset.x(i))).collect();
    let dual = p.dual_norm(&w.w);
    let upper = risk_lp(&margins, dual, rho, kappa, 1.0)?.clamp(0.0, 1.0);
    let lower = (1.0 - risk_lp(&margins, dual, rho, kappa, -1.0)?).clamp(0.0, 1.0);
    Ok((lower.min(upper), upper))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalReport {
    pub rho: f64,
    /// Flip cost; absent for regression and for κ = ∞.
    pub kappa: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub radius_source: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn basic_radius_branches() {
        let p = LightTailParams::default();
        let r = radius_basic(2, 2, 1.0, &p).unwrap();
        assert!((r - math::powf(0.5, 1.0 / 3.0)).abs() < 1e-15);
        // log(e/0.01) ≈ 5.6 > N = 3
        let r = radius_basic(3, 2, 0.01, &p).unwrap();
        let base = math::ln(core::f64::consts::E / 0.01) / 3.0;
        assert!((r - math::sqrt(base)).abs() < 1e-15);
        assert_eq!(radius_basic(10, 1, 0.1, &p), Err(Error::UnsupportedDimension(1)));
    }

    #[test]
    fn improved_radius_threshold() {
        let p = LightTailParams::default();
        let bx = HypothesisBox::unit_basis(1.0, 1.0).unwrap();
        assert_eq!(radius_improved(100, 2, 0.1, &p, &bx), Err(Error::SampleSizeTooSmall { required: 1024.0 }));
        let r1 = radius_improved(2000, 2, 0.1, &p, &bx).unwrap();
        let r2 = radius_improved(2000, 2, 0.1, &p, &HypothesisBox::unit_basis(1.0, 2.0).unwrap()).unwrap();
        assert!((r2 - 2.0 * r1).abs() < 1e-12);
    }

    #[test]
    fn error_interval_single_point() {
        let d = Dataset::from_rows(&[[1.0]], &[2.0], Task::Regression).unwrap();
        let w = LinearHypothesis::new(vec![1.0]).unwrap();
        let (lo, hi) = error_interval(&d, &w, 0.5, NormP::Two).unwrap();
        let s = 0.5 * math::sqrt(2.0);
        assert!((hi - (1.0 + s)).abs() < 1e-14 && (lo - (1.0 - s)).abs() < 1e-14);
        assert_eq!(error_interval(&d, &w, 100.0, NormP::Two).unwrap().0, 0.0);
    }

    #[test]
    fn risk_interval_at_zero_radius_is_empirical() {
        let d = Dataset::from_rows(&[[1.0], [2.0], [-1.0], [0.5]], &[1.0, 1.0, 1.0, -1.0], Task::Classification).unwrap();
        let w = LinearHypothesis::new(vec![1.0]).unwrap();
        let (lo, hi) = risk_interval(&d, &w, 0.0, 0.5, NormP::Two).unwrap();
        assert!((lo - 0.5).abs() < 1e-9 && (hi - 0.5).abs() < 1e-9, "{lo} {hi}");
        let (_, hi) = risk_interval(&d, &w, 1e3, 0.5, NormP::Two).unwrap();
        assert!((hi - 1.0).abs() < 1e-9);
    }
}

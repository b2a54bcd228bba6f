//! Helpers for writing dual-norm constraints into linear programs.

use alloc::vec::Vec;

use crate::metric::{CostKind, TransportCost};
use crate::norm::NormP;
use crate::solver::LinearProgram;
use crate::{Error, Result};

/// `Σ coeff·var + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn term(mut self, var: usize, coeff: f64) -> Self {
        if coeff != 0.0 {
            self.terms.push((var, coeff));
        }
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { terms: self.terms.iter().map(|(j, a)| (*j, a * s)).collect(), constant: self.constant * s }
    }
}

/// Adds `expr ≤ rhs_var·rhs_scale` (when given) as a row.
fn add_le(lp: &mut LinearProgram, expr: &Affine, bound: Option<(usize, f64)>) {
    let mut row = expr.terms.clone();
    if let Some((var, scale)) = bound {
        row.push((var, -scale));
    }
    lp.add_le(row, -expr.constant);
}

/// Adds `‖comps‖_q ≤ scale·λ` for the norm `q` dual to `p`.
pub(crate) fn add_norm_le(lp: &mut LinearProgram, p: NormP, comps: &[Affine], lambda: usize, scale: f64, tag: &str) -> Result<()> {
    match p.dual() {
        NormP::Inf => {
            for c in comps {
                add_le(lp, c, Some((lambda, scale)));
                add_le(lp, &c.scaled(-1.0), Some((lambda, scale)));
            }
        }
        NormP::One => {
            let mut sum = Affine::default();
            for (k, c) in comps.iter().enumerate() {
                if c.terms.is_empty() {
                    sum.constant += c.constant.abs();
                    continue;
                }
                let t = lp.add_nonneg(alloc::format!("{tag}.t[{k}]"), 0.0);
                add_le(lp, c, Some((t, 1.0)));
                add_le(lp, &c.scaled(-1.0), Some((t, 1.0)));
                sum = sum.term(t, 1.0);
            }
            add_le(lp, &sum, Some((lambda, scale)));
        }
        NormP::Two => return Err(Error::UnsupportedNorm(p)),
    }
    Ok(())
}

/// Adds the constraint that the dual transport norm of the functional
/// `(x, y) ↦ <u, x> + v·y` is at most λ.
pub(crate) fn add_dual_pair_le(
    lp: &mut LinearProgram,
    cost: &TransportCost,
    u: &[Affine],
    v: &Affine,
    lambda: usize,
    tag: &str,
) -> Result<()> {
    match cost.kind {
        CostKind::JointRegression => {
            let mut comps = u.to_vec();
            comps.push(v.clone());
            add_norm_le(lp, cost.input_norm, &comps, lambda, 1.0, tag)
        }
        CostKind::SeparableRegression { kappa } => {
            add_norm_le(lp, cost.input_norm, u, lambda, 1.0, tag)?;
            if kappa.is_finite() {
                add_le(lp, v, Some((lambda, kappa)));
                add_le(lp, &v.scaled(-1.0), Some((lambda, kappa)));
            }
            Ok(())
        }
        CostKind::SeparableClassification { .. } => add_norm_le(lp, cost.input_norm, u, lambda, 1.0, tag),
    }
}

/// Adds auxiliary variables bounding `‖comps‖_p` from above and returns their
/// sum; the bound is tight at any optimum that pushes it down.
pub(crate) fn norm_epigraph(lp: &mut LinearProgram, p: NormP, comps: &[Affine], tag: &str) -> Result<Affine> {
    match p {
        NormP::One => {
            let mut sum = Affine::default();
            for (k, c) in comps.iter().enumerate() {
                let t = lp.add_nonneg(alloc::format!("{tag}.n[{k}]"), 0.0);
                add_le(lp, c, Some((t, 1.0)));
                add_le(lp, &c.scaled(-1.0), Some((t, 1.0)));
                sum = sum.term(t, 1.0);
            }
            Ok(sum)
        }
        NormP::Inf => {
            let t = lp.add_nonneg(alloc::format!("{tag}.n"), 0.0);
            for c in comps {
                add_le(lp, c, Some((t, 1.0)));
                add_le(lp, &c.scaled(-1.0), Some((t, 1.0)));
            }
            Ok(Affine::default().term(t, 1.0))
        }
        NormP::Two => Err(Error::UnsupportedNorm(p)),
    }
}

//! Transportation costs on the input-output space.

use alloc::vec;
use alloc::vec::Vec;

use crate::norm::NormP;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum CostKind {
    /// `‖x - x'‖ + κ·1{y ≠ y'}`.
    SeparableClassification { kappa: f64 },
    /// `‖x - x'‖ + κ|y - y'|`.
    SeparableRegression { kappa: f64 },
    /// The p-norm of the stacked difference `(x - x', y - y')`.
    JointRegression,
}

/// Ground metric `d((x, y), (x', y'))` used to move probability mass.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransportCost {
    pub input_norm: NormP,
    pub kind: CostKind,
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter("label cost kappa must be positive".into()))
    }
}

impl TransportCost {
    pub fn joint(p: NormP) -> Self {
        Self { input_norm: p, kind: CostKind::JointRegression }
    }

    pub fn separable_regression(p: NormP, kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(Self { input_norm: p, kind: CostKind::SeparableRegression { kappa } })
    }

    pub fn classification(p: NormP, kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(Self { input_norm: p, kind: CostKind::SeparableClassification { kappa } })
    }

    /// The label weight κ, `None` for the joint metric.
    pub fn kappa(&self) -> Option<f64> {
        match self.kind {
            CostKind::SeparableClassification { kappa } | CostKind::SeparableRegression { kappa } => Some(kappa),
            CostKind::JointRegression => None,
        }
    }

    pub fn is_classification(&self) -> bool {
        matches!(self.kind, CostKind::SeparableClassification { .. })
    }

    pub fn distance(&self, x1: &[f64], y1: f64, x2: &[f64], y2: f64) -> f64 {
        let dx: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
        let dy = y1 - y2;
        match self.kind {
            CostKind::SeparableClassification { kappa } => {
                self.input_norm.norm(&dx) + if y1 != y2 { kappa } else { 0.0 }
            }
            CostKind::SeparableRegression { kappa } => {
                let label = if dy == 0.0 { 0.0 } else { kappa * dy.abs() };
                self.input_norm.norm(&dx) + label
            }
            CostKind::JointRegression => {
                let mut v = dx;
                v.push(dy);
                self.input_norm.norm(&v)
            }
        }
    }

    /// Dual norm of the functional `(x, y) ↦ <u, x> + v·y` on the regression
    /// input-output space. For classification costs only the input part counts.
    pub fn dual_pair(&self, u: &[f64], v: f64) -> f64 {
        match self.kind {
            CostKind::JointRegression => {
                let mut z = u.to_vec();
                z.push(v);
                self.input_norm.dual_norm(&z)
            }
            CostKind::SeparableRegression { kappa } => {
                let label = if v == 0.0 { 0.0 } else { v.abs() / kappa };
                self.input_norm.dual_norm(u).max(label)
            }
            CostKind::SeparableClassification { .. } => self.input_norm.dual_norm(u),
        }
    }

    /// `‖(w, -1)‖_*` for the regression costs.
    pub fn regression_dual(&self, w: &[f64]) -> f64 {
        self.dual_pair(w, -1.0)
    }

    /// A direction `(x, y)` of unit transport cost maximizing `<u, x> + v·y`.
    pub fn dual_pair_maximizer(&self, u: &[f64], v: f64) -> (Vec<f64>, f64) {
        match self.kind {
            CostKind::JointRegression => {
                let mut z = u.to_vec();
                z.push(v);
                let mut m = self.input_norm.dual_maximizer(&z);
                let y = m.pop().unwrap_or(0.0);
                (m, y)
            }
            CostKind::SeparableRegression { kappa } => {
                let ux = self.input_norm.dual_norm(u);
                let uy = if v == 0.0 { 0.0 } else { v.abs() / kappa };
                if ux >= uy {
                    (self.input_norm.dual_maximizer(u), 0.0)
                } else {
                    (vec![0.0; u.len()], v.signum() / kappa)
                }
            }
            CostKind::SeparableClassification { .. } => (self.input_norm.dual_maximizer(u), 0.0),
        }
    }
}

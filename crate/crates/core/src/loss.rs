//! Univariate convex losses `L(z)`.
//!
//! Regression losses are applied to residuals `z = <w, x> - y`, classification
//! losses to margins `z = y <w, x>`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "name", rename_all = "snake_case"))]
pub enum LossSpec {
    Hinge,
    SmoothHinge,
    Logloss,
    Huber { delta: f64 },
    EpsInsensitive { eps: f64 },
    Pinball { tau: f64 },
    Absolute,
    /// `max_j (a_j z + b_j)`.
    Pwl { pieces: Vec<(f64, f64)> },
}

impl LossSpec {
    pub fn huber(delta: f64) -> Result<Self> {
        let l = LossSpec::Huber { delta };
        l.validate()?;
        Ok(l)
    }

    pub fn eps_insensitive(eps: f64) -> Result<Self> {
        let l = LossSpec::EpsInsensitive { eps };
        l.validate()?;
        Ok(l)
    }

    pub fn pinball(tau: f64) -> Result<Self> {
        let l = LossSpec::Pinball { tau };
        l.validate()?;
        Ok(l)
    }

    pub fn pwl(pieces: Vec<(f64, f64)>) -> Result<Self> {
        let l = LossSpec::Pwl { pieces };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        match self {
            LossSpec::Huber { delta } if !(delta.is_finite() && *delta > 0.0) => bad("Huber threshold must be positive"),
            LossSpec::EpsInsensitive { eps } if !(eps.is_finite() && *eps >= 0.0) => {
                bad("epsilon must be nonnegative")
            }
            LossSpec::Pinball { tau } if !(0.0..=1.0).contains(tau) => bad("pinball tau must lie in [0, 1]"),
            LossSpec::Pwl { pieces } if pieces.is_empty() => bad("piecewise linear loss needs at least one piece"),
            LossSpec::Pwl { pieces } if pieces.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) => {
                bad("piecewise linear loss has non-finite coefficients")
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            LossSpec::Hinge => (1.0 - z).max(0.0),
            LossSpec::SmoothHinge => {
                if z <= 0.0 {
                    0.5 - z
                } else if z < 1.0 {
                    0.5 * (1.0 - z) * (1.0 - z)
                } else {
                    0.0
                }
            }
            LossSpec::Logloss => math::softplus(-z),
            LossSpec::Huber { delta } => {
                if z.abs() <= *delta {
                    0.5 * z * z
                } else {
                    delta * (z.abs() - 0.5 * delta)
                }
            }
            LossSpec::EpsInsensitive { eps } => (z.abs() - eps).max(0.0),
            LossSpec::Pinball { tau } => (-tau * z).max((1.0 - tau) * z),
            LossSpec::Absolute => z.abs(),
            LossSpec::Pwl { pieces } => pieces.iter().map(|(a, b)| a * z + b).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            LossSpec::Hinge | LossSpec::SmoothHinge | LossSpec::Logloss => 1.0,
            LossSpec::Huber { delta } => *delta,
            LossSpec::EpsInsensitive { .. } | LossSpec::Absolute => 1.0,
            LossSpec::Pinball { tau } => tau.max(1.0 - tau),
            LossSpec::Pwl { pieces } => pieces.iter().fold(0.0, |m, (a, _)| m.max(a.abs())),
        }
    }

    pub fn is_pwl(&self) -> bool {
        !matches!(self, LossSpec::Huber { .. } | LossSpec::SmoothHinge | LossSpec::Logloss)
    }

    /// Affine pieces `(a_j, b_j)` with `L(z) = max_j (a_j z + b_j)`.
    pub fn pwl_pieces(&self) -> Result<Vec<(f64, f64)>> {
        match self {
            LossSpec::Hinge => Ok(vec![(0.0, 0.0), (-1.0, 1.0)]),
            LossSpec::EpsInsensitive { eps } => Ok(vec![(0.0, 0.0), (1.0, -eps), (-1.0, -eps)]),
            LossSpec::Pinball { tau } => Ok(vec![(-tau, 0.0), (1.0 - tau, 0.0)]),
            LossSpec::Absolute => Ok(vec![(1.0, 0.0), (-1.0, 0.0)]),
            LossSpec::Pwl { pieces } => Ok(pieces.clone()),
            _ => Err(Error::NotPwl),
        }
    }

    /// `L'(z)` where the derivative exists, `None` at kinks.
    pub fn derivative(&self, z: f64) -> Option<f64> {
        match self {
            LossSpec::Hinge => match z.partial_cmp(&1.0)? {
                core::cmp::Ordering::Less => Some(-1.0),
                core::cmp::Ordering::Greater => Some(0.0),
                core::cmp::Ordering::Equal => None,
            },
            LossSpec::SmoothHinge => Some(if z <= 0.0 {
                -1.0
            } else if z < 1.0 {
                z - 1.0
            } else {
                0.0
            }),
            LossSpec::Logloss => Some(-math::sigmoid(-z)),
            LossSpec::Huber { delta } => Some(z.clamp(-delta, *delta)),
            LossSpec::EpsInsensitive { eps } => {
                if z.abs() == *eps {
                    None
                } else if z > *eps {
                    Some(1.0)
                } else if z < -eps {
                    Some(-1.0)
                } else {
                    Some(0.0)
                }
            }
            LossSpec::Pinball { tau } => {
                if z > 0.0 {
                    Some(1.0 - tau)
                } else if z < 0.0 {
                    Some(-tau)
                } else {
                    None
                }
            }
            LossSpec::Absolute => {
                if z == 0.0 {
                    None
                } else {
                    Some(z.signum())
                }
            }
            LossSpec::Pwl { pieces } => {
                let top = self.eval(z);
                let scale = 1e-12 * (1.0 + top.abs());
                let mut slopes = pieces.iter().filter(|(a, b)| top - (a * z + b) <= scale).map(|(a, _)| *a);
                let first = slopes.next()?;
                if slopes.all(|a| (a - first).abs() <= 1e-12) {
                    Some(first)
                } else {
                    None
                }
            }
        }
    }

    /// A subgradient of `L` at `z`.
    pub fn subgradient(&self, z: f64) -> f64 {
        if let Some(g) = self.derivative(z) {
            return g;
        }
        match self {
            LossSpec::Hinge => -1.0,
            LossSpec::EpsInsensitive { .. } => z.signum(),
            LossSpec::Pinball { tau } => 1.0 - tau,
            LossSpec::Absolute => 0.0,
            LossSpec::Pwl { pieces } => {
                let top = self.eval(z);
                pieces
                    .iter()
                    .filter(|(a, b)| top - (a * z + b) <= 1e-12 * (1.0 + top.abs()))
                    .map(|(a, _)| *a)
                    .next()
                    .unwrap_or(0.0)
            }
            _ => 0.0,
        }
    }

    /// Limiting slopes `(lim_{z→-∞} L'(z), lim_{z→+∞} L'(z))`.
    pub fn asymptotic_slopes(&self) -> (f64, f64) {
        match self {
            LossSpec::Hinge | LossSpec::SmoothHinge | LossSpec::Logloss => (-1.0, 0.0),
            LossSpec::Huber { delta } => (-delta, *delta),
            LossSpec::EpsInsensitive { .. } | LossSpec::Absolute => (-1.0, 1.0),
            LossSpec::Pinball { tau } => (-tau, 1.0 - tau),
            LossSpec::Pwl { pieces } => pieces
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, _)| (lo.min(*a), hi.max(*a))),
        }
    }

    /// `+1` if `L` grows at rate `lip(L)` towards `+∞`, else `-1`.
    pub fn steep_direction(&self) -> f64 {
        let (left, right) = self.asymptotic_slopes();
        if right.abs() >= left.abs() {
            1.0
        } else {
            -1.0
        }
    }

    /// Whether `|L'(z)| = lip(L)` with the derivative existing at `z`.
    pub fn attains_lipschitz_slope(&self, z: f64) -> bool {
        match self {
            LossSpec::Logloss => false,
            LossSpec::SmoothHinge => z < 0.0,
            _ => match self.derivative(z) {
                Some(g) => (g.abs() - self.lipschitz()).abs() <= 1e-12 * (1.0 + self.lipschitz()),
                None => false,
            },
        }
    }

    pub fn name(&self) -> alloc::string::String {
        match self {
            LossSpec::Hinge => "hinge".into(),
            LossSpec::SmoothHinge => "smooth_hinge".into(),
            LossSpec::Logloss => "logloss".into(),
            LossSpec::Huber { delta } => format!("huber:{delta}"),
            LossSpec::EpsInsensitive { eps } => format!("eps_insensitive:{eps}"),
            LossSpec::Pinball { tau } => format!("pinball:{tau}"),
            LossSpec::Absolute => "absolute".into(),
            LossSpec::Pwl { .. } => "pwl".into(),
        }
    }
}

/// `L(z)`.
pub fn loss_eval(loss: &LossSpec, z: f64) -> f64 {
    loss.eval(z)
}

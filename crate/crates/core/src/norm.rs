//! Vector p-norms for p in {1, 2, ∞} and their duals.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Exponent of a vector norm on feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NormP {
    One,
    Two,
    Inf,
}

impl NormP {
    /// The conjugate exponent q with 1/p + 1/q = 1.
    pub fn dual(self) -> NormP {
        match self {
            NormP::One => NormP::Inf,
            NormP::Two => NormP::Two,
            NormP::Inf => NormP::One,
        }
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormP::One => v.iter().map(|x| x.abs()).sum(),
            NormP::Two => math::sqrt(v.iter().map(|x| x * x).sum()),
            NormP::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// `‖v‖_*`, the norm dual to this one.
    pub fn dual_norm(self, v: &[f64]) -> f64 {
        self.dual().norm(v)
    }

    /// A point `x` of the closed unit ball of this norm with `<v, x> = ‖v‖_*`.
    ///
    /// For `v = 0` the zero vector is returned.
    pub fn dual_maximizer(self, v: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; v.len()];
        match self {
            NormP::Two => {
                let n = self.norm(v);
                if n > 0.0 {
                    for (xi, vi) in x.iter_mut().zip(v) {
                        *xi = vi / n;
                    }
                }
            }
            NormP::One => {
                let (k, m) = v
                    .iter()
                    .enumerate()
                    .fold((0, 0.0), |acc, (i, vi)| if vi.abs() > acc.1 { (i, vi.abs()) } else { acc });
                if m > 0.0 {
                    x[k] = v[k].signum();
                }
            }
            NormP::Inf => {
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi = if *vi > 0.0 {
                        1.0
                    } else if *vi < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                }
            }
        }
        x
    }
}

impl fmt::Display for NormP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormP::One => "1",
            NormP::Two => "2",
            NormP::Inf => "inf",
        })
    }
}

impl core::str::FromStr for NormP {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(NormP::One),
            "2" => Ok(NormP::Two),
            "inf" | "infinity" | "∞" => Ok(NormP::Inf),
            other => Err(crate::Error::InvalidParameter(alloc::format!("unknown norm exponent `{other}`"))),
        }
    }
}

/// `‖v‖_q` where q is dual to p.
pub fn dual_norm(p: NormP, v: &[f64]) -> f64 {
    p.dual_norm(v)
}

/// Euclidean projection of `v` onto `{x : ‖x‖₁ ≤ radius}` by sorting.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let radius = radius.max(0.0);
    if NormP::One.norm(v) <= radius {
        return v.to_vec();
    }
    if radius == 0.0 {
        return vec![0.0; v.len()];
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - radius) / (k + 1) as f64;
        if *m > t {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|x| x.signum() * (x.abs() - theta).max(0.0)).collect()
}

/// Euclidean projection of `v` onto the `p`-norm ball of the given radius.
pub fn project_ball(p: NormP, v: &[f64], radius: f64) -> Vec<f64> {
    let radius = radius.max(0.0);
    match p {
        NormP::One => project_l1_ball(v, radius),
        NormP::Two => {
            let n = p.norm(v);
            if n <= radius {
                v.to_vec()
            } else {
                v.iter().map(|x| x * radius / n).collect()
            }
        }
        NormP::Inf => v.iter().map(|x| x.clamp(-radius, radius)).collect(),
    }
}

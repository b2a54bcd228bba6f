//! Distributionally robust learning over Wasserstein balls.
//!
//! The crate trains linear, kernel and feed-forward hypotheses by minimizing
//! the worst-case expected loss over all distributions within a transportation
//! distance `rho` of the empirical distribution, and certifies fixed
//! hypotheses with extremal distributions, error/risk intervals and
//! generalization radii.
//!
//! Everything here is `no_std` (with `alloc`). Dataset files, model
//! persistence and the command-line front end live in the `wassdrl` crate.
//!
//! Module map:
//!
//! - [`data`], [`loss`], [`norm`], [`metric`], [`support`]: domain types.
//! - [`solver`]: dense simplex LP, composite first-order solver, symmetric
//!   eigen-decomposition.
//! - [`regression`], [`classification`]: linear trainers and worst-case
//!   evaluators.
//! - [`extremal`]: worst-case distributions for fixed hypotheses.
//! - [`kernel`]: kernels, growth functions and kernelized trainers.
//! - [`bounds`]: generalization radii and error/risk intervals.
//! - [`neural`]: Lipschitz-regularized feed-forward networks.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod classification;
pub mod data;
mod error;
pub mod extremal;
pub mod kernel;
pub mod linalg;
pub mod loss;
mod lpform;
pub(crate) mod math;
pub mod metric;
pub mod neural;
pub mod norm;
pub mod regression;
pub mod solver;
pub mod support;

pub use crate::data::{Dataset, Task};
pub use crate::error::{Error, Result};
pub use crate::linalg::Matrix;
pub use crate::loss::LossSpec;
pub use crate::metric::TransportCost;
pub use crate::norm::NormP;
pub use crate::support::{Polytope, SupportSet};

/// A linear hypothesis `h(x) = <w, x>`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearHypothesis {
    pub w: alloc::vec::Vec<f64>,
}

impl LinearHypothesis {
    pub fn new(w: alloc::vec::Vec<f64>) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("hypothesis has non-finite entries".into()));
        }
        Ok(Self { w })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.w, x)
    }
}

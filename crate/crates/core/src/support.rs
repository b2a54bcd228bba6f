//! Polyhedral support sets for the samples.
//!
//! Regression supports live in the input-output space,
//! `Ξ = {(x, y) : C1 x + c2 y ≤ d}`; classification supports constrain the
//! inputs only, `𝕏 = {x : C x ≤ d}`.

use alloc::vec::Vec;

use crate::linalg::{dot, Matrix};
use crate::solver::{solve_lp, LinearProgram, LpStatus, Sense, SolveOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    c_x: Matrix,
    c_y: Option<Vec<f64>>,
    d: Vec<f64>,
    slater: Vec<f64>,
}

impl Polytope {
    /// Builds the polytope and finds a Slater point when none is given.
    ///
    /// `c_y` is the output column for regression supports; pass `None` for
    /// input-only sets. A supplied Slater point is `x` or `(x, y)` stacked.
    pub fn new(c_x: Matrix, c_y: Option<Vec<f64>>, d: Vec<f64>, slater: Option<Vec<f64>>) -> Result<Self> {
        let m = c_x.rows();
        if d.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: d.len() });
        }
        if let Some(cy) = &c_y {
            if cy.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: cy.len() });
            }
        }
        if c_x.data().iter().chain(&d).chain(c_y.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("support polytope has non-finite entries".into()));
        }
        let mut poly = Self { c_x, c_y, d, slater: Vec::new() };
        let point = match slater {
            Some(p) => {
                if p.len() != poly.ambient_dim() {
                    return Err(Error::DimensionMismatch { expected: poly.ambient_dim(), found: p.len() });
                }
                if poly.slack(&p).iter().any(|s| *s <= 0.0) {
                    return Err(Error::NoSlaterPoint);
                }
                p
            }
            None => poly.find_slater()?,
        };
        poly.slater = point;
        Ok(poly)
    }

    /// The box `lo ≤ x ≤ hi` over inputs, or over `(x, y)` when `with_output`
    /// is set (then `lo`/`hi` carry n + 1 entries).
    pub fn bounding_box(lo: &[f64], hi: &[f64], with_output: bool) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        let k = lo.len();
        let n = if with_output { k - 1 } else { k };
        let mut c_x = Matrix::zeros(2 * k, n);
        let mut c_y = alloc::vec![0.0; 2 * k];
        let mut d = Vec::with_capacity(2 * k);
        for j in 0..k {
            if j < n {
                c_x[(2 * j, j)] = 1.0;
                c_x[(2 * j + 1, j)] = -1.0;
            } else {
                c_y[2 * j] = 1.0;
                c_y[2 * j + 1] = -1.0;
            }
            d.push(hi[j]);
            d.push(-lo[j]);
        }
        let centre: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        Self::new(c_x, with_output.then_some(c_y), d, Some(centre))
    }

    pub fn input_dim(&self) -> usize {
        self.c_x.cols()
    }

    pub fn has_output(&self) -> bool {
        self.c_y.is_some()
    }

    /// Dimension of the space the polytope lives in.
    pub fn ambient_dim(&self) -> usize {
        self.c_x.cols() + usize::from(self.has_output())
    }

    pub fn num_constraints(&self) -> usize {
        self.d.len()
    }

    pub fn c_x(&self) -> &Matrix {
        &self.c_x
    }

    /// Output column `c2`; zeros for input-only sets.
    pub fn c_y(&self, i: usize) -> f64 {
        self.c_y.as_ref().map_or(0.0, |c| c[i])
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn slater(&self) -> &[f64] {
        &self.slater
    }

    /// `d - C ξ` for a stacked point ξ.
    pub fn slack(&self, point: &[f64]) -> Vec<f64> {
        let n = self.input_dim();
        (0..self.num_constraints())
            .map(|i| {
                let y = if self.has_output() { point[n] * self.c_y(i) } else { 0.0 };
                self.d[i] - dot(self.c_x.row(i), &point[..n]) - y
            })
            .collect()
    }

    pub fn contains(&self, x: &[f64], y: Option<f64>, tol: f64) -> bool {
        let mut p = x.to_vec();
        if self.has_output() {
            p.push(y.unwrap_or(0.0));
        }
        let scale = 1.0 + self.d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.slack(&p).iter().all(|s| *s >= -tol * scale)
    }

    /// Maximizes a uniform slack `t ≤ 1` with `C ξ + t·1 ≤ d`.
    fn find_slater(&self) -> Result<Vec<f64>> {
        let k = self.ambient_dim();
        let n = self.input_dim();
        let mut lp = LinearProgram::new(Sense::Maximize);
        let vars: Vec<usize> = (0..k).map(|j| lp.add_free(alloc::format!("xi{j}"), 0.0)).collect();
        let t = lp.add_var("t", 1.0, f64::NEG_INFINITY, 1.0);
        for i in 0..self.num_constraints() {
            let mut row: Vec<(usize, f64)> = (0..n).map(|j| (vars[j], self.c_x[(i, j)])).collect();
            if self.has_output() {
                row.push((vars[n], self.c_y(i)));
            }
            row.push((t, 1.0));
            lp.add_le(row, self.d[i]);
        }
        let sol = solve_lp(&lp, &SolveOptions::default())?;
        match sol.status {
            LpStatus::Optimal if sol.primal[t] > 1e-9 => Ok(sol.primal[..k].to_vec()),
            LpStatus::Optimal if sol.primal[t] < -1e-9 => Err(Error::InfeasibleSupport),
            LpStatus::Infeasible => Err(Error::InfeasibleSupport),
            _ => Err(Error::NoSlaterPoint),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum SupportSet {
    #[default]
    Unbounded,
    Polytope(Polytope),
}

impl SupportSet {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, SupportSet::Unbounded)
    }

    pub fn contains(&self, x: &[f64], y: Option<f64>, tol: f64) -> bool {
        match self {
            SupportSet::Unbounded => true,
            SupportSet::Polytope(p) => p.contains(x, y, tol),
        }
    }
}

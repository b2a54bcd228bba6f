//! Dense two-phase tableau simplex.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::SolveOptions;
use crate::linalg::{lu_solve, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    rhs: f64,
}

/// `opt cᵀz  s.t.  A z ≤ b,  E z = f,  lower ≤ z ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    sense: Sense,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    names: Vec<String>,
    ineq: Vec<Row>,
    eq: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub primal: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    /// The solution itself if optimal, otherwise the matching error.
    pub fn into_optimal(self) -> Result<Self> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            LpStatus::Infeasible => Err(Error::Infeasible),
            LpStatus::Unbounded => Err(Error::Unbounded),
        }
    }
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            cost: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            names: Vec::new(),
            ineq: Vec::new(),
            eq: Vec::new(),
        }
    }

    /// Dense constructor. Empty `a_eq` / `a_ub` blocks are allowed.
    #[allow(clippy::too_many_arguments)]
    pub fn from_dense(
        sense: Sense,
        c: &[f64],
        a_ub: &Matrix,
        b_ub: &[f64],
        a_eq: &Matrix,
        b_eq: &[f64],
        lower: &[f64],
        upper: &[f64],
    ) -> Result<Self> {
        let n = c.len();
        for (m, b) in [(a_ub, b_ub), (a_eq, b_eq)] {
            if m.rows() != b.len() {
                return Err(Error::DimensionMismatch { expected: m.rows(), found: b.len() });
            }
            if m.rows() > 0 && m.cols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.cols() });
            }
        }
        if lower.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: lower.len().min(upper.len()) });
        }
        let mut lp = Self::new(sense);
        for j in 0..n {
            lp.add_var(alloc::format!("z{j}"), c[j], lower[j], upper[j]);
        }
        for i in 0..a_ub.rows() {
            lp.add_le(a_ub.row(i).iter().copied().enumerate(), b_ub[i]);
        }
        for i in 0..a_eq.rows() {
            lp.add_eq(a_eq.row(i).iter().copied().enumerate(), b_eq[i]);
        }
        Ok(lp)
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.push(name.into());
        self.cost.len() - 1
    }

    pub fn add_nonneg(&mut self, name: impl Into<String>, cost: f64) -> usize {
        self.add_var(name, cost, 0.0, f64::INFINITY)
    }

    pub fn add_free(&mut self, name: impl Into<String>, cost: f64) -> usize {
        self.add_var(name, cost, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.cost[var] = cost;
    }

    fn row(coeffs: impl IntoIterator<Item = (usize, f64)>, rhs: f64) -> Row {
        Row { coeffs: coeffs.into_iter().filter(|(_, a)| *a != 0.0).collect(), rhs }
    }

    pub fn add_le(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        self.ineq.push(Self::row(coeffs, rhs));
    }

    pub fn add_ge(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        self.ineq.push(Self::row(coeffs.into_iter().map(|(j, a)| (j, -a)), -rhs));
    }

    pub fn add_eq(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        self.eq.push(Self::row(coeffs, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.ineq.len() + self.eq.len()
    }

    pub fn var_name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        self.cost.iter().zip(z).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint or bound at `z`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let lhs = |r: &Row| r.coeffs.iter().map(|(j, a)| a * z[*j]).sum::<f64>();
        let mut v: f64 = 0.0;
        for r in &self.ineq {
            v = v.max(lhs(r) - r.rhs);
        }
        for r in &self.eq {
            v = v.max((lhs(r) - r.rhs).abs());
        }
        for (j, zj) in z.iter().enumerate() {
            v = v.max(self.lower[j] - zj).max(zj - self.upper[j]);
        }
        v
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        for r in self.ineq.iter().chain(&self.eq) {
            if !r.rhs.is_finite() {
                return Err(Error::InvalidParameter("non-finite right-hand side".into()));
            }
            for (j, a) in &r.coeffs {
                if *j >= n {
                    return Err(Error::DimensionMismatch { expected: n, found: *j + 1 });
                }
                if !a.is_finite() {
                    return Err(Error::InvalidParameter("non-finite constraint coefficient".into()));
                }
            }
        }
        for j in 0..n {
            if !self.cost[j].is_finite() || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::InvalidParameter(alloc::format!("bad cost or bounds for `{}`", self.names[j])));
            }
        }
        Ok(())
    }
}

impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sense = match self.sense {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        };
        writeln!(f, "{sense}")?;
        write!(f, " ")?;
        for (j, c) in self.cost.iter().enumerate() {
            if *c != 0.0 {
                write!(f, " {:+} {}", c, self.names[j])?;
            }
        }
        writeln!(f)?;
        writeln!(f, "subject to")?;
        let write_row = |f: &mut fmt::Formatter<'_>, r: &Row, op: &str| -> fmt::Result {
            write!(f, " ")?;
            for (j, a) in &r.coeffs {
                write!(f, " {:+} {}", a, self.names[*j])?;
            }
            writeln!(f, " {op} {}", r.rhs)
        };
        for r in &self.ineq {
            write_row(f, r, "<=")?;
        }
        for r in &self.eq {
            write_row(f, r, "=")?;
        }
        writeln!(f, "bounds")?;
        for j in 0..self.num_vars() {
            writeln!(f, "  {} <= {} <= {}", self.lower[j], self.names[j], self.upper[j])?;
        }
        writeln!(f, "end")
    }
}

/// How an original variable is expressed through nonnegative columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Shift { col: usize, lo: f64 },
    Flip { col: usize, hi: f64 },
    Split { pos: usize, neg: usize },
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 50;

struct Tableau {
    rows: usize,
    width: usize,
    // (rows + 1) × width; the last row holds reduced costs, the last column the rhs
    t: Vec<f64>,
    basis: Vec<usize>,
    // original standard-form row behind each tableau row
    row_ids: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.at(r, c);
        {
            let row = &mut self.t[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[c] = 1.0;
        }
        let nz: Vec<usize> = (0..w).filter(|&k| self.t[r * w + k] != 0.0).collect();
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let update = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for &k in &nz {
                    row[k] -= f * prow[k];
                }
                row[c] = 0.0;
            }
        };
        for row in before.chunks_exact_mut(w) {
            update(row);
        }
        for row in after.chunks_exact_mut(w) {
            update(row);
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on the current objective row over columns `< allowed`.
    fn optimize(&mut self, allowed: usize, iterations: &mut usize, max_iter: usize) -> Result<bool> {
        let mut degenerate = 0usize;
        let obj = self.rows;
        loop {
            let bland = degenerate >= DEGENERATE_SWITCH;
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..allowed {
                let r = self.at(obj, j);
                if r < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(c) = enter else { return Ok(true) };
            let mut leave: Option<(usize, f64, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    match leave {
                        None => leave = Some((i, ratio, a)),
                        Some((li, lr, la)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            let better = if tie {
                                if bland {
                                    self.basis[i] < self.basis[li]
                                } else {
                                    a > la
                                }
                            } else {
                                ratio < lr
                            };
                            if better {
                                leave = Some((i, ratio, a));
                            }
                        }
                    }
                }
            }
            let Some((r, ratio, _)) = leave else { return Ok(false) };
            if *iterations >= max_iter {
                return Err(Error::MaxIterations(*iterations));
            }
            *iterations += 1;
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.t.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.row_ids.remove(r);
        self.rows -= 1;
    }
}

pub fn solve_lp(lp: &LinearProgram, opts: &SolveOptions) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    // map variables onto nonnegative structural columns
    let mut maps = Vec::with_capacity(n);
    let mut ns = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        if lo > hi {
            return Ok(LpSolution { status: LpStatus::Infeasible, value: f64::NAN, primal: vec![], iterations: 0 });
        }
        if lo.is_finite() {
            maps.push(VarMap::Shift { col: ns, lo });
            if hi.is_finite() {
                bound_rows.push((ns, hi - lo));
            }
            ns += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Flip { col: ns, hi });
            ns += 1;
        } else {
            maps.push(VarMap::Split { pos: ns, neg: ns + 1 });
            ns += 2;
        }
    }

    // standard rows over structural columns: (coeffs, rhs, is_eq)
    let mut std_rows: Vec<(Vec<(usize, f64)>, f64, bool)> = Vec::new();
    let mut translate = |r: &Row, is_eq: bool| {
        let mut coeffs = Vec::with_capacity(r.coeffs.len() + 1);
        let mut rhs = r.rhs;
        for &(j, a) in &r.coeffs {
            match maps[j] {
                VarMap::Shift { col, lo } => {
                    coeffs.push((col, a));
                    rhs -= a * lo;
                }
                VarMap::Flip { col, hi } => {
                    coeffs.push((col, -a));
                    rhs -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    coeffs.push((pos, a));
                    coeffs.push((neg, -a));
                }
            }
        }
        std_rows.push((coeffs, rhs, is_eq));
    };
    for r in &lp.ineq {
        translate(r, false);
    }
    for r in &lp.eq {
        translate(r, true);
    }
    for (col, ub) in bound_rows {
        std_rows.push((vec![(col, 1.0)], ub, false));
    }

    let m = std_rows.len();
    let n_slack = std_rows.iter().filter(|r| !r.2).count();
    let n_art = std_rows.iter().filter(|r| r.2 || r.1 < 0.0).count();
    let slack0 = ns;
    let art0 = ns + n_slack;
    let width = ns + n_slack + n_art + 1;
    let mut tab = Tableau {
        rows: m,
        width,
        t: vec![0.0; (m + 1) * width],
        basis: vec![0; m],
        row_ids: (0..m).collect(),
    };
    // the original standard-form matrix (without sign flips) for polishing
    let mut std_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); width - 1];
    let mut std_rhs = vec![0.0; m];
    let (mut next_slack, mut next_art) = (slack0, art0);
    for (i, (coeffs, rhs, is_eq)) in std_rows.iter().enumerate() {
        let flip = if *rhs < 0.0 { -1.0 } else { 1.0 };
        for &(col, a) in coeffs {
            tab.t[i * width + col] += flip * a;
        }
        tab.t[i * width + width - 1] = flip * rhs;
        std_rhs[i] = flip * rhs;
        if !is_eq {
            tab.t[i * width + next_slack] = flip;
            tab.basis[i] = next_slack;
            next_slack += 1;
        }
        if *is_eq || *rhs < 0.0 {
            tab.t[i * width + next_art] = 1.0;
            tab.basis[i] = next_art;
            next_art += 1;
        }
    }
    for i in 0..m {
        for j in 0..width - 1 {
            let v = tab.t[i * width + j];
            if v != 0.0 {
                std_cols[j].push((i, v));
            }
        }
    }

    let max_iter = opts.max_iterations;
    let mut iterations = 0usize;
    let b_scale = 1.0 + std_rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));

    if n_art > 0 {
        let obj = m * width;
        for i in 0..m {
            if tab.basis[i] >= art0 {
                for j in 0..width {
                    if j < art0 || j == width - 1 {
                        tab.t[obj + j] -= tab.t[i * width + j];
                    }
                }
            }
        }
        tab.optimize(width - 1, &mut iterations, max_iter)?;
        let infeas = -tab.t[obj + width - 1];
        if infeas > 1e-7 * b_scale {
            return Ok(LpSolution { status: LpStatus::Infeasible, value: f64::NAN, primal: vec![], iterations });
        }
        // drive artificials out of the basis or drop redundant rows
        let mut i = 0;
        while i < tab.rows {
            if tab.basis[i] >= art0 {
                let pick = (0..art0)
                    .filter(|&j| tab.at(i, j).abs() > 1e-7)
                    .max_by(|&a, &b| tab.at(i, a).abs().partial_cmp(&tab.at(i, b).abs()).unwrap());
                match pick {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => tab.remove_row(i),
                }
            } else {
                i += 1;
            }
        }
    }

    // phase 2 costs on structural columns
    let mut c_std = vec![0.0; width - 1];
    for j in 0..n {
        let c = sign * lp.cost[j];
        match maps[j] {
            VarMap::Shift { col, .. } => c_std[col] += c,
            VarMap::Flip { col, .. } => c_std[col] -= c,
            VarMap::Split { pos, neg } => {
                c_std[pos] += c;
                c_std[neg] -= c;
            }
        }
    }
    let rows = tab.rows;
    let obj = rows * width;
    for j in 0..width {
        tab.t[obj + j] = if j < width - 1 { c_std[j] } else { 0.0 };
    }
    for i in 0..rows {
        let cb = c_std[tab.basis[i]];
        if cb != 0.0 {
            for j in 0..width {
                tab.t[obj + j] -= cb * tab.t[i * width + j];
            }
        }
    }
    let bounded = tab.optimize(art0, &mut iterations, max_iter)?;
    if !bounded {
        return Ok(LpSolution { status: LpStatus::Unbounded, value: sign * f64::NEG_INFINITY, primal: vec![], iterations });
    }

    let mut x_std = vec![0.0; width - 1];
    for i in 0..rows {
        x_std[tab.basis[i]] = tab.rhs(i).max(0.0);
    }
    polish(&tab, &std_cols, &std_rhs, &mut x_std);

    let primal: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, lo } => lo + x_std[col],
            VarMap::Flip { col, hi } => hi - x_std[col],
            VarMap::Split { pos, neg } => x_std[pos] - x_std[neg],
        })
        .collect();
    let value = lp.objective(&primal);
    Ok(LpSolution { status: LpStatus::Optimal, value, primal, iterations })
}

/// Recomputes basic values from the original rows to shed accumulated pivot error.
fn polish(tab: &Tableau, std_cols: &[Vec<(usize, f64)>], std_rhs: &[f64], x: &mut [f64]) {
    let k = tab.rows;
    if k == 0 || k > 1500 {
        return;
    }
    let mut pos = vec![usize::MAX; std_rhs.len()];
    for (local, &orig) in tab.row_ids.iter().enumerate() {
        pos[orig] = local;
    }
    let mut b = Matrix::zeros(k, k);
    for (c, &var) in tab.basis.iter().enumerate() {
        for &(row, v) in &std_cols[var] {
            if pos[row] != usize::MAX {
                b[(pos[row], c)] = v;
            }
        }
    }
    let rhs: Vec<f64> = tab.row_ids.iter().map(|&r| std_rhs[r]).collect();
    let Ok(xb) = lu_solve(&b, &rhs) else { return };
    // keep the tableau values if the refined system disagrees grossly
    let drift = tab.basis.iter().zip(&xb).fold(0.0f64, |m, (&var, v)| m.max((x[var] - v).abs()));
    if !drift.is_finite() || drift > 1e-4 * (1.0 + x.iter().fold(0.0f64, |a, b| a.max(b.abs()))) {
        return;
    }
    for (&var, v) in tab.basis.iter().zip(&xb) {
        x[var] = if *v < 0.0 && *v > -1e-9 { 0.0 } else { *v };
    }
}

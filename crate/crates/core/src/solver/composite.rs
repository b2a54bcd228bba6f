//! First-order solver for nonsmooth convex programs
//!
//! `min F(x)  s.t.  x[k] ≥ c·‖x[..k]‖`
//!
//! where the optional constraint couples an epigraph variable `λ = x[k]` with
//! the weights `w = x[..k]`. A projected subgradient method with `c0/√k`
//! steps locates the optimum coarsely; for moderate dimensions a deep-cut
//! ellipsoid method then certifies the optimality gap.

use alloc::vec;
use alloc::vec::Vec;

use super::SolveOptions;
use crate::linalg::{dot, norm2};
use crate::math;
use crate::norm::{project_ball, NormP};

/// A convex objective with subgradient oracle.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Returns `F(x)` and writes a subgradient into `g`.
    fn eval(&self, x: &[f64], g: &mut [f64]) -> f64;

    fn value(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.eval(x, &mut g)
    }
}

/// `x[w_len] ≥ scale·‖x[..w_len]‖_norm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub w_len: usize,
    pub scale: f64,
    pub norm: NormP,
}

impl Coupling {
    fn violation(&self, x: &[f64]) -> f64 {
        self.scale * self.norm.norm(&x[..self.w_len]) - x[self.w_len]
    }

    /// Subgradient of the violation function.
    fn cut(&self, x: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        let sub = self.norm.dual().dual_maximizer(&x[..self.w_len]);
        for (gi, si) in g.iter_mut().zip(&sub) {
            *gi = self.scale * si;
        }
        g[self.w_len] = -1.0;
    }

    /// Euclidean projection onto the coupling set.
    pub fn project(&self, x: &mut [f64]) {
        let k = self.w_len;
        let lam0 = x[k];
        if self.violation(x) <= 0.0 {
            return;
        }
        if self.scale <= 0.0 {
            x[k] = lam0.max(0.0);
            return;
        }
        let w0 = x[..k].to_vec();
        // φ(t) = ½ dist²(w0, B(t/c)) + ½ (t - λ0)² is convex with derivative
        // (t - λ0) - ‖w0 - P(t/c)‖_* / c, which bisection drives to zero.
        let dphi = |t: f64| {
            let p = project_ball(self.norm, &w0, t / self.scale);
            let r: Vec<f64> = w0.iter().zip(&p).map(|(a, b)| a - b).collect();
            (t - lam0) - self.norm.dual_norm(&r) / self.scale
        };
        let (mut lo, mut hi) = (lam0.max(0.0), lam0.max(self.scale * self.norm.norm(&w0)));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if dphi(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let p = project_ball(self.norm, &w0, t / self.scale);
        x[..k].copy_from_slice(&p);
        x[k] = t;
    }
}

pub struct CompositeProblem<'a> {
    pub objective: &'a dyn Objective,
    pub coupling: Option<Coupling>,
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out before the stopping rule fired.
    pub converged: bool,
    /// Best objective value at the end of every 100-iteration window of the
    /// first-order phase, followed by the refined value.
    pub trace: Vec<f64>,
}

const ELLIPSOID_MAX_DIM: usize = 64;

pub fn solve_composite(problem: &CompositeProblem<'_>, opts: &SolveOptions) -> CompositeSolution {
    let f = problem.objective;
    let d = f.dim();
    let mut x = problem.start.clone().unwrap_or_else(|| vec![0.0; d]);
    if let Some(c) = &problem.coupling {
        c.project(&mut x);
    }
    let mut g = vec![0.0; d];
    let mut best_x = x.clone();
    let mut best = f.eval(&x, &mut g);
    let mut trace = Vec::new();
    let refine = d <= ELLIPSOID_MAX_DIM;
    let budget = if refine { (opts.max_iterations / 10).max(100) } else { opts.max_iterations };
    let mut window_start = best;
    let mut iterations = 0;
    let mut converged = false;
    for k in 1..=budget {
        iterations = k;
        let gn = norm2(&g);
        if gn == 0.0 {
            converged = true;
            break;
        }
        let step = opts.step / math::sqrt(k as f64) / gn;
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
        if let Some(c) = &problem.coupling {
            c.project(&mut x);
        }
        let v = f.eval(&x, &mut g);
        if v < best {
            best = v;
            best_x.copy_from_slice(&x);
        }
        if k % 100 == 0 {
            trace.push(best);
            if window_start - best <= opts.tolerance * (1.0 + best.abs()) {
                converged = true;
                break;
            }
            window_start = best;
        }
    }
    if refine && d > 0 {
        let (rx, rv, its, ok) = ellipsoid(f, problem.coupling.as_ref(), &best_x, best, opts);
        iterations += its;
        converged = ok;
        if rv < best {
            best = rv;
            best_x = rx;
        }
        trace.push(best);
    }
    CompositeSolution { x: best_x, value: best, iterations, converged, trace }
}

fn feasible(c: Option<&Coupling>, x: &[f64]) -> bool {
    c.is_none_or(|c| c.violation(x) <= 0.0)
}

/// Deep-cut ellipsoid method started around `x0`, restarted with a larger
/// radius whenever the optimum appears to sit near the boundary.
fn ellipsoid(
    f: &dyn Objective,
    coupling: Option<&Coupling>,
    x0: &[f64],
    f0: f64,
    opts: &SolveOptions,
) -> (Vec<f64>, f64, usize, bool) {
    let d = x0.len();
    let mut best_x = x0.to_vec();
    let mut best = if feasible(coupling, x0) { f0 } else { f64::INFINITY };
    let mut radius = 4.0 * (norm2(x0) + 1.0);
    let mut total = 0;
    let mut ok = false;
    let cap = 200 * (d + 1) * (d + 1);
    for _restart in 0..4 {
        let centre0 = best_x.clone();
        let (its, done) = if d == 1 {
            interval_search(f, &centre0, radius, &mut best_x, &mut best, opts)
        } else {
            ellipsoid_run(f, coupling, &centre0, radius, &mut best_x, &mut best, opts, cap)
        };
        total += its;
        ok = done;
        let moved = norm2(&best_x.iter().zip(&centre0).map(|(a, b)| a - b).collect::<Vec<_>>());
        if moved < 0.25 * radius {
            break;
        }
        radius *= 4.0;
    }
    (best_x, best, total, ok)
}

#[allow(clippy::too_many_arguments)]
fn ellipsoid_run(
    f: &dyn Objective,
    coupling: Option<&Coupling>,
    centre: &[f64],
    radius: f64,
    best_x: &mut [f64],
    best: &mut f64,
    opts: &SolveOptions,
    cap: usize,
) -> (usize, bool) {
    let d = centre.len();
    let df = d as f64;
    let mut c = centre.to_vec();
    let mut p = vec![0.0; d * d];
    for i in 0..d {
        p[i * d + i] = radius * radius;
    }
    let mut g = vec![0.0; d];
    let mut pg = vec![0.0; d];
    let mut lower = f64::NEG_INFINITY;
    for it in 0..cap {
        let violated = coupling.filter(|cp| cp.violation(&c) > 0.0);
        let gap = match violated {
            Some(cp) => {
                cp.cut(&c, &mut g);
                cp.violation(&c)
            }
            None => {
                let v = f.eval(&c, &mut g);
                if v < *best {
                    *best = v;
                    best_x.copy_from_slice(&c);
                }
                v - *best
            }
        };
        matvec_sym(&p, &g, &mut pg);
        let s = math::sqrt(dot(&g, &pg).max(0.0));
        if s <= 1e-300 {
            return (it, violated.is_none());
        }
        if violated.is_none() {
            lower = lower.max(*best + gap - s);
            if *best - lower <= opts.tolerance * (1.0 + best.abs()) {
                return (it, true);
            }
        }
        let alpha = (gap / s).clamp(0.0, 0.9);
        let b: Vec<f64> = pg.iter().map(|v| v / s).collect();
        let tau = (1.0 + df * alpha) / (df + 1.0);
        for (ci, bi) in c.iter_mut().zip(&b) {
            *ci -= tau * bi;
        }
        let sigma = 2.0 * (1.0 + df * alpha) / ((df + 1.0) * (1.0 + alpha));
        let delta = df * df / (df * df - 1.0) * (1.0 - alpha * alpha);
        for i in 0..d {
            for j in i..d {
                let v = delta * (p[i * d + j] - sigma * b[i] * b[j]);
                p[i * d + j] = v;
                p[j * d + i] = v;
            }
        }
    }
    (cap, false)
}

/// One-dimensional counterpart of the ellipsoid method: bisection on the sign
/// of the subgradient.
fn interval_search(
    f: &dyn Objective,
    centre: &[f64],
    radius: f64,
    best_x: &mut [f64],
    best: &mut f64,
    opts: &SolveOptions,
) -> (usize, bool) {
    let (mut lo, mut hi) = (centre[0] - radius, centre[0] + radius);
    let mut g = [0.0];
    for it in 0..400 {
        let m = 0.5 * (lo + hi);
        let v = f.eval(&[m], &mut g);
        if v < *best {
            *best = v;
            best_x[0] = m;
        }
        if g[0] == 0.0 {
            return (it, true);
        }
        let lower = v - g[0].abs() * (hi - lo) * 0.5;
        if *best - lower <= opts.tolerance * (1.0 + best.abs()) {
            return (it, true);
        }
        if g[0] > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    (400, false)
}

fn matvec_sym(p: &[f64], g: &[f64], out: &mut [f64]) {
    let d = g.len();
    for i in 0..d {
        out[i] = dot(&p[i * d..(i + 1) * d], g);
    }
}

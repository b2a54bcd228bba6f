//! Independent reference computations for integration tests. Nothing here
//! calls the crate's solvers.
#![allow(dead_code)]

use wassdrl_core::linalg::{sym_eigen, Matrix};
use wassdrl_core::NormP;

pub fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

pub fn pnorm(p: NormP, v: &[f64]) -> f64 {
    match p {
        NormP::One => v.iter().map(|x| x.abs()).sum(),
        NormP::Two => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormP::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

pub fn dual(p: NormP) -> NormP {
    match p {
        NormP::One => NormP::Inf,
        NormP::Two => NormP::Two,
        NormP::Inf => NormP::One,
    }
}

/// Cartesian product of per-axis grids, each of `k` points over `[lo, hi]`
/// plus the given extra coordinates.
pub fn box_grid(lo: &[f64], hi: &[f64], k: usize, extra: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = (0..lo.len())
        .map(|a| {
            let mut v = linspace(lo[a], hi[a], k);
            v.extend(extra.iter().map(|e| e[a]).filter(|c| *c >= lo[a] && *c <= hi[a]));
            v
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        out = out.into_iter().flat_map(|p| axis.iter().map(move |c| {
            let mut q = p.clone();
            q.push(*c);
            q
        })).collect();
    }
    out
}

/// Worst-case expectation through the dual representation
/// `inf_λ≥0 λρ + (1/N) Σᵢ sup_ξ [f(ξ) - λ c(ξ, ξ̂ᵢ)]`, with `λ` on a uniform
/// grid over `[0, lam_max]` and `ξ` restricted to `candidates`.
///
/// Restricting `ξ` underestimates each inner supremum while the λ grid
/// overestimates the infimum; at 200 λ points and 50 points per axis the
/// documented resolution is 2% relative.
pub fn lemma1_grid<F, C>(samples: &[Vec<f64>], candidates: &[Vec<f64>], f: F, cost: C, rho: f64, lam_max: f64, lam_points: usize) -> f64
where
    F: Fn(&[f64]) -> f64,
    C: Fn(&[f64], &[f64]) -> f64,
{
    let fv: Vec<f64> = candidates.iter().map(|g| f(g)).collect();
    let cv: Vec<Vec<f64>> = samples.iter().map(|s| candidates.iter().map(|g| cost(g, s)).collect()).collect();
    let n = samples.len() as f64;
    linspace(0.0, lam_max, lam_points)
        .into_iter()
        .map(|lam| {
            let tail: f64 = cv
                .iter()
                .map(|ci| fv.iter().zip(ci).fold(f64::NEG_INFINITY, |m, (fg, cg)| m.max(fg - lam * cg)))
                .sum();
            lam * rho + tail / n
        })
        .fold(f64::INFINITY, f64::min)
}

/// Maximizes `cᵀx` over `{Ax ≤ b, x ≥ 0}` by enumerating every vertex.
/// Returns `None` when the polytope is empty.
pub fn lp_by_vertices(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        rows.push((e, 0.0));
    }
    let m = rows.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let sys: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let rhs: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = gauss(sys, rhs) {
            if rows.iter().all(|(r, bi)| r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= bi + 1e-9) {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |bv: f64| bv.max(v)));
            }
        }
        // next combination
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < m - n + k {
                idx[k] += 1;
                for t in k + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())?;
        if a[piv][k].abs() < 1e-12 {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Ternary search for the minimizer of a convex function on `[lo, hi]`.
pub fn ternary<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..300 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

/// ℓ₁-ball projection by bisection on the soft-threshold level.
pub fn l1_project_bisect(v: &[f64], r: f64) -> Vec<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= r {
        return v.to_vec();
    }
    let mass = |th: f64| v.iter().map(|x| (x.abs() - th).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let th = 0.5 * (lo + hi);
    v.iter().map(|x| x.signum() * (x.abs() - th).max(0.0)).collect()
}

/// Reference `argmin_V η·max_j‖v_j‖₁ + ½‖V - W‖²`: an outer ternary search
/// over the column cap with bisection-based inner projections.
pub fn prox_macs_oracle(w: &Matrix, eta: f64) -> Matrix {
    let cols: Vec<Vec<f64>> = (0..w.cols()).map(|j| w.col(j)).collect();
    let cap_cost = |t: f64| -> f64 {
        eta * t + 0.5 * cols.iter().map(|c| {
            let p = l1_project_bisect(c, t);
            c.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        }).sum::<f64>()
    };
    let hi = cols.iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let t = ternary(cap_cost, 0.0, hi);
    let mut out = Matrix::zeros(w.rows(), w.cols());
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in l1_project_bisect(c, t).into_iter().enumerate() {
            out.data_mut()[i * w.cols() + j] = v;
        }
    }
    out
}

pub fn prox_mars_oracle(w: &Matrix, eta: f64) -> Matrix {
    prox_macs_oracle(&w.transpose(), eta).transpose()
}

/// Reference `argmin_V η·σ_max(V) + ½‖V - W‖²`: singular pairs from the
/// eigen-decomposition of `WᵀW`, cap found by ternary search.
pub fn prox_spectral_oracle(w: &Matrix, eta: f64) -> Matrix {
    let gram = w.transpose().matmul(w);
    let (vals, vecs) = sym_eigen(&gram).unwrap();
    let s: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    let cost = |t: f64| eta * t + 0.5 * s.iter().map(|x| (x - t).max(0.0).powi(2)).sum::<f64>();
    let t = ternary(cost, 0.0, s.iter().sum::<f64>());
    let mut out = w.clone();
    for (k, sk) in s.iter().enumerate() {
        let cut = (sk - t).max(0.0);
        if cut == 0.0 || *sk <= 1e-14 {
            continue;
        }
        let v = vecs.col(k);
        let u: Vec<f64> = w.matvec(&v).iter().map(|x| x / sk).collect();
        for i in 0..w.rows() {
            for j in 0..w.cols() {
                out.data_mut()[i * w.cols() + j] -= cut * u[i] * v[j];
            }
        }
    }
    out
}

pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|k| {
            y[k] = x[k] + h;
            let up = f(&y);
            y[k] = x[k] - h;
            let down = f(&y);
            y[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Compass search for convex functions: halves the step whenever no axis
/// move improves.
pub fn compass_search<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], mut step: f64, tol: f64) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    while step > tol {
        let mut moved = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] += dir * step;
                let fy = f(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (x, fx)
}

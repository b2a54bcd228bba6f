//! Proximal operators of `η‖W‖` for the induced 1-, 2- and ∞-norms.

use alloc::vec::Vec;

use crate::linalg::{compose_svd, svd, Matrix};
use crate::norm::{project_l1_ball, NormP};

const GOLDEN_TOL: f64 = 1e-8;

fn col_l1(w: &Matrix, j: usize) -> f64 {
    (0..w.rows()).map(|i| w[(i, j)].abs()).sum()
}

/// Projects every column onto the ℓ₁ ball of radius `u` and returns the
/// projection together with half the squared distance.
fn cap_columns(w: &Matrix, u: f64) -> (Matrix, f64) {
    let mut out = w.clone();
    let mut dist = 0.0;
    for j in 0..w.cols() {
        let col = w.col(j);
        let proj = project_l1_ball(&col, u);
        for i in 0..w.rows() {
            dist += (col[i] - proj[i]) * (col[i] - proj[i]);
            out[(i, j)] = proj[i];
        }
    }
    (out, 0.5 * dist)
}

/// `argmin_V η max_j ‖v_j‖₁ + ½‖V - W‖²_F`.
///
/// For a fixed column cap `u` the minimizer projects each column onto the
/// ℓ₁ ball of radius `u`; the remaining one-dimensional problem in `u` is
/// convex and solved by golden-section search.
pub fn prox_macs(w: &Matrix, eta: f64) -> Matrix {
    if eta <= 0.0 {
        return w.clone();
    }
    let hi = (0..w.cols()).map(|j| col_l1(w, j)).fold(0.0, f64::max);
    if hi == 0.0 {
        return w.clone();
    }
    let f = |u: f64| eta * u + cap_columns(w, u).1;
    let phi = 0.5 * (crate::math::sqrt(5.0) - 1.0);
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL * hi.max(1.0) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // the ends of the bracket are candidates too
    let u = [0.0, mid, hi].into_iter().min_by(|x, y| f(*x).partial_cmp(&f(*y)).unwrap()).unwrap();
    cap_columns(w, u).0
}

/// `argmin_V η max_i ‖v_i‖₁ + ½‖V - W‖²_F` over rows, via the transpose.
pub fn prox_mars(w: &Matrix, eta: f64) -> Matrix {
    prox_macs(&w.transpose(), eta).transpose()
}

/// `argmin_V η σ_max(V) + ½‖V - W‖²_F`: singular values are clipped at the
/// level `t` with `Σ max(sᵢ - t, 0) = η`, and vanish when `Σ sᵢ ≤ η`.
pub fn prox_spectral(w: &Matrix, eta: f64) -> Matrix {
    if eta <= 0.0 {
        return w.clone();
    }
    let (u, s, v) = svd(w);
    let total: f64 = s.iter().sum();
    if total <= eta {
        return Matrix::zeros(w.rows(), w.cols());
    }
    // s is descending; find k with the level inside [s_{k+1}, s_k]
    let mut prefix = 0.0;
    let mut level = 0.0;
    for (k, sk) in s.iter().enumerate() {
        prefix += sk;
        let t = (prefix - eta) / (k + 1) as f64;
        let next = s.get(k + 1).copied().unwrap_or(0.0);
        if t >= next {
            level = t;
            break;
        }
    }
    let clipped: Vec<f64> = s.iter().map(|x| x.min(level)).collect();
    compose_svd(&u, &clipped, &v)
}

/// Singular value thresholding `U max(S - η, 0) Vᵀ`, the proximal operator
/// of the nuclear norm.
pub fn singular_value_threshold(w: &Matrix, eta: f64) -> Matrix {
    let (u, s, v) = svd(w);
    let shrunk: Vec<f64> = s.iter().map(|x| (x - eta).max(0.0)).collect();
    compose_svd(&u, &shrunk, &v)
}

/// Proximal operator of `η‖W‖_p` for the induced norm with exponent `p`.
pub fn prox_layer(w: &Matrix, eta: f64, p: NormP) -> Matrix {
    match p {
        NormP::One => prox_macs(w, eta),
        NormP::Two => prox_spectral(w, eta),
        NormP::Inf => prox_mars(w, eta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::operator_norm;

    fn objective(v: &Matrix, w: &Matrix, eta: f64, p: NormP) -> f64 {
        let d = v.sub(w).frobenius();
        eta * operator_norm(v, p) + 0.5 * d * d
    }

    #[test]
    fn zero_eta_is_identity() {
        let w = Matrix::from_rows(&[[1.0, -2.0, 0.5], [0.3, 0.0, 4.0]]).unwrap();
        for p in [NormP::One, NormP::Two, NormP::Inf] {
            assert_eq!(prox_layer(&w, 0.0, p), w);
        }
    }

    #[test]
    fn large_eta_gives_zero() {
        let w = Matrix::from_rows(&[[1.0, -2.0], [0.3, 4.0]]).unwrap();
        for p in [NormP::One, NormP::Two, NormP::Inf] {
            assert!(prox_layer(&w, 100.0, p).max_abs() < 1e-9);
        }
    }

    #[test]
    fn spectral_clips_top_singular_values() {
        let w = Matrix::from_diag(&[3.0, 1.0]);
        let v = prox_spectral(&w, 1.0);
        assert!(v.sub(&Matrix::from_diag(&[2.0, 1.0])).max_abs() < 1e-12);
        let v = prox_spectral(&w, 2.0);
        assert!(v.sub(&Matrix::from_diag(&[1.0, 1.0])).max_abs() < 1e-12);
        let s = singular_value_threshold(&w, 2.0);
        assert!(s.sub(&Matrix::from_diag(&[1.0, 0.0])).max_abs() < 1e-12);
    }

    #[test]
    fn outputs_beat_coordinate_perturbations() {
        let w = Matrix::from_rows(&[[0.9, -0.2, 0.4], [-0.5, 1.3, 0.1]]).unwrap();
        for p in [NormP::One, NormP::Two, NormP::Inf] {
            let v = prox_layer(&w, 0.4, p);
            let base = objective(&v, &w, 0.4, p);
            for k in 0..6 {
                for h in [1e-4, -1e-4] {
                    let mut q = v.clone();
                    q.data_mut()[k] += h;
                    assert!(objective(&q, &w, 0.4, p) >= base - 1e-12, "{p} {k}");
                }
            }
        }
    }
}

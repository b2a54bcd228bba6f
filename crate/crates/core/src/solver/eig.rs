//! Square roots of symmetric positive semidefinite matrices.

use crate::linalg::{compose_svd, sym_eigen, Matrix};
use crate::math;
use crate::{Error, Result};

fn clipped_eigen(k: &Matrix) -> Result<(alloc::vec::Vec<f64>, Matrix, f64)> {
    let (vals, vecs) = sym_eigen(k)?;
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(&min) = vals.last() {
        if min < -1e-8 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::IndefiniteBeyondTolerance(min));
        }
    }
    Ok((vals, vecs, scale))
}

/// `K^{1/2} = V diag(√max(λᵢ, 0)) Vᵀ`.
pub fn sym_eig_sqrt(k: &Matrix) -> Result<Matrix> {
    let (vals, vecs, _) = clipped_eigen(k)?;
    let roots: alloc::vec::Vec<f64> = vals.iter().map(|v| math::sqrt(v.max(0.0))).collect();
    Ok(symmetrize(compose_svd(&vecs, &roots, &vecs)))
}

/// Moore-Penrose inverse of `K^{1/2}`, treating eigenvalues below
/// `1e-12·‖K‖` as zero.
pub fn sym_eig_pinv_sqrt(k: &Matrix) -> Result<Matrix> {
    let (vals, vecs, scale) = clipped_eigen(k)?;
    let cut = 1e-12 * scale;
    let inv: alloc::vec::Vec<f64> = vals.iter().map(|v| if *v > cut { 1.0 / math::sqrt(*v) } else { 0.0 }).collect();
    Ok(symmetrize(compose_svd(&vecs, &inv, &vecs)))
}

fn symmetrize(mut m: Matrix) -> Matrix {
    let n = m.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

//! Small dense linear-algebra helpers shared by the inference code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{LrmarError, Result};

/// Returns `(A + A') / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Ratio of extreme eigenvalue magnitudes of a symmetric matrix.
pub fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(symmetrize(a));
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a symmetric positive-definite matrix together with `log|A|`.
///
/// The input is symmetrized before the Cholesky factorization and the
/// returned inverse is symmetrized again.
pub fn spd_inverse(a: &DMatrix<f64>, stage: &str) -> Result<(DMatrix<f64>, f64)> {
    let sym = symmetrize(a);
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(LrmarError::numerical(stage, "matrix has non-finite entries"));
    }
    let chol = sym.clone().cholesky().ok_or_else(|| {
        LrmarError::numerical(
            stage,
            format!(
                "matrix is not positive definite (condition estimate {:.3e})",
                condition_estimate(&sym)
            ),
        )
    })?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let inv = symmetrize(&chol.inverse());
    Ok((inv, log_det))
}

/// `log|A|` of a symmetric positive-definite matrix.
pub fn spd_log_det(a: &DMatrix<f64>, stage: &str) -> Result<f64> {
    let chol = symmetrize(a).cholesky().ok_or_else(|| {
        LrmarError::numerical(
            stage,
            format!(
                "matrix is not positive definite (condition estimate {:.3e})",
                condition_estimate(a)
            ),
        )
    })?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Truncated thin SVD: left vectors (rows x k), singular values (k),
/// right vectors as rows (k x cols), sorted by decreasing singular value.
///
/// Each right singular vector is sign-fixed so that its largest-magnitude
/// entry is positive, which makes the decomposition reproducible.
pub fn top_svd(a: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested u");
    let vt = svd.v_t.expect("requested v_t");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));
    let k = k.min(s.len());
    let mut u_k = DMatrix::zeros(a.nrows(), k);
    let mut s_k = DVector::zeros(k);
    let mut vt_k = DMatrix::zeros(k, a.ncols());
    for (dst, &src) in order.iter().take(k).enumerate() {
        let row = vt.row(src);
        let pivot = row
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        u_k.set_column(dst, &(u.column(src) * sign));
        vt_k.set_row(dst, &(row * sign));
        s_k[dst] = s[src];
    }
    (u_k, s_k, vt_k)
}

/// Squared Frobenius norm.
pub fn frob2(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// `trace(A B)` without forming the product.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

//! Conjugate coordinate updates of the mean-field posterior.
//!
//! Each function returns the optimal factor given all the others, so every
//! call can only lower the free energy.

use nalgebra::{DMatrix, DVector};

use super::posterior::{GammaFamily, LatentPosterior, VPosterior, WPosterior};
use crate::design::LaggedDesign;
use crate::error::{LrmarError, Result};
use crate::linalg::spd_inverse;
use crate::spec::ModelSpec;

/// E-step: `s_z = (I + E[V Ω⁻¹ V'])⁻¹` and
/// `z_bar_t = s_z (W' y⁻_t + V diag(ω) y⁺_t)` for every row.
pub fn update_latent(
    design: &LaggedDesign,
    w: &WPosterior,
    v: &VPosterior,
    omega: &GammaFamily,
) -> Result<LatentPosterior> {
    let omega_mean = omega.means();
    let q = v.v_bar.nrows();
    let precision = DMatrix::identity(q, q) + v.weighted_inner(&omega_mean);
    let (s_z, _) = spd_inverse(&precision, "latent covariance")?;
    let drive = &design.y_minus * &w.w_bar + scale_columns(&design.y_plus, &omega_mean) * v.v_bar.transpose();
    let z_bar = drive * &s_z;
    Ok(LatentPosterior { z_bar, s_z })
}

/// `s_w = (diag(α) + Y⁻'Y⁻)⁻¹`, `w_bar_j = s_w Y⁻' z_bar_j`.
pub fn update_w(
    design: &LaggedDesign,
    latent: &LatentPosterior,
    alpha: &GammaFamily,
) -> Result<WPosterior> {
    let mut precision = design.gram().clone();
    for (k, a) in alpha.means().iter().enumerate() {
        precision[(k, k)] += a;
    }
    let (s_w, _) = spd_inverse(&precision, "regression factor covariance")?;
    let w_bar = &s_w * design.y_minus.tr_mul(&latent.z_bar);
    Ok(WPosterior { w_bar, s_w })
}

/// Shape `κ + Q/2`, rate `b + ½ Σ_j (w_bar² + s_w diag)` per regressor row.
pub fn update_alpha(w: &WPosterior, spec: &ModelSpec) -> Result<GammaFamily> {
    let d = w.w_bar.nrows();
    let q = w.w_bar.ncols();
    let prior = spec.b.resolve(d, "b")?;
    let rates = DVector::from_fn(d, |k, _| {
        let energy: f64 = w.w_bar.row(k).iter().map(|x| x * x).sum::<f64>() + q as f64 * w.s_w[(k, k)];
        prior[k] + 0.5 * energy
    });
    let g = GammaFamily::new(spec.kappa + q as f64 / 2.0, rates);
    g.check_positive("regression precision update")?;
    Ok(g)
}

/// Per output column `n`: `s_v[n] = (diag(γ) + ω_n E[Z'Z])⁻¹`,
/// `v_bar_n = ω_n s_v[n] z_bar' y⁺_n`.
pub fn update_v(
    design: &LaggedDesign,
    latent: &LatentPosterior,
    omega: &GammaFamily,
    gamma: &GammaFamily,
) -> Result<VPosterior> {
    let ezz = latent.second_moment();
    let zty = latent.z_bar.tr_mul(&design.y_plus);
    update_loadings(&ezz, &zty, &omega.means(), &gamma.means(), "readout")
}

/// Shape `ι + M/2`; rate `a_n + ½ E‖y⁺_n − Z v_n‖²`.
pub fn update_omega(
    design: &LaggedDesign,
    latent: &LatentPosterior,
    v: &VPosterior,
    spec: &ModelSpec,
) -> Result<GammaFamily> {
    let prior = spec.a.resolve(design.outputs(), "a")?;
    let ezz = latent.second_moment();
    let zty = latent.z_bar.tr_mul(&design.y_plus);
    update_noise(
        spec.iota,
        &prior,
        design.m,
        design.target_sq_norms(),
        &zty,
        &ezz,
        v,
        "noise precision update",
    )
}

/// Shape `ν + NL/2`; rate `c_j + ½ Σ_n (v_bar_jn² + s_v[n]_jj)`.
pub fn update_gamma(v: &VPosterior, spec: &ModelSpec) -> Result<GammaFamily> {
    let prior = spec.c.resolve(v.v_bar.nrows(), "c")?;
    update_ard(spec.nu, &prior, v, "readout precision update")
}

pub(crate) fn scale_columns(a: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= w[j];
    }
    out
}

/// Column-factorized Gaussian loadings with row-wise ARD, given the latent
/// second moment `ezz` and the cross moment `zty = z_bar' Y`.
pub(crate) fn update_loadings(
    ezz: &DMatrix<f64>,
    zty: &DMatrix<f64>,
    noise_prec: &DVector<f64>,
    ard_prec: &DVector<f64>,
    what: &str,
) -> Result<VPosterior> {
    let q = ezz.nrows();
    let d = zty.ncols();
    let mut v_bar = DMatrix::zeros(q, d);
    let mut s_v = Vec::with_capacity(d);
    for n in 0..d {
        let mut precision = ezz * noise_prec[n];
        for j in 0..q {
            precision[(j, j)] += ard_prec[j];
        }
        let (s, _) = spd_inverse(&precision, &format!("{what} covariance, column {n}"))?;
        let mean = (&s * zty.column(n)) * noise_prec[n];
        v_bar.set_column(n, &mean);
        s_v.push(s);
    }
    Ok(VPosterior { v_bar, s_v })
}

/// `½ E‖y_n − Z v_n‖²` for every column, from sufficient statistics.
pub(crate) fn expected_residual_half(
    y_sq: &DVector<f64>,
    zty: &DMatrix<f64>,
    ezz: &DMatrix<f64>,
    v: &VPosterior,
) -> DVector<f64> {
    DVector::from_fn(y_sq.len(), |n, _| {
        let vn = v.v_bar.column(n);
        let cross = vn.dot(&zty.column(n));
        let quad = (ezz * vn).dot(&vn) + crate::linalg::trace_product(&v.s_v[n], ezz);
        0.5 * (y_sq[n] - 2.0 * cross + quad)
    })
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn update_noise(
    shape_prior: f64,
    rate_prior: &DVector<f64>,
    m: usize,
    y_sq: &DVector<f64>,
    zty: &DMatrix<f64>,
    ezz: &DMatrix<f64>,
    v: &VPosterior,
    stage: &str,
) -> Result<GammaFamily> {
    let half = expected_residual_half(y_sq, zty, ezz, v);
    let rates = rate_prior + half;
    if let Some((n, r)) = rates.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
        return Err(LrmarError::numerical(
            stage,
            format!("noise rate for column {n} is {r}, must be positive"),
        ));
    }
    Ok(GammaFamily::new(shape_prior + m as f64 / 2.0, rates))
}

pub(crate) fn update_ard(
    shape_prior: f64,
    rate_prior: &DVector<f64>,
    v: &VPosterior,
    stage: &str,
) -> Result<GammaFamily> {
    let rates = rate_prior + v.row_energy() * 0.5;
    let g = GammaFamily::new(shape_prior + v.v_bar.ncols() as f64 / 2.0, rates);
    g.check_positive(stage)?;
    Ok(g)
}

//! Free energy (negative evidence lower bound) of the mean-field posterior.
//!
//! `F = E[log q(Z)] + KL(q(params) || p(params)) - E[log p(Y | Z, params)] - E[log p(Z | params)]`
//!
//! Lower is better. Under exact coordinate updates it never increases.

use std::f64::consts::{E, PI};

use nalgebra::{DMatrix, DVector};

use super::posterior::{
    FreeEnergyReport, GammaFamily, LatentPosterior, Posterior, Priors, VPosterior, WPosterior,
};
use super::updates::expected_residual_half;
use crate::design::LaggedDesign;
use crate::error::{LrmarError, Result};
use crate::linalg::{frob2, spd_log_det, trace_product};
use crate::spec::ModelSpec;

/// Individual KL divergences making up `kl_phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlTerms {
    pub w: f64,
    pub alpha: f64,
    pub v: f64,
    pub gamma: f64,
    pub omega: f64,
}

impl KlTerms {
    pub fn total(&self) -> f64 {
        self.w + self.alpha + self.v + self.gamma + self.omega
    }
}

/// `E[log q(Z)] = -(M/2) log|2πe s_z|`.
pub(crate) fn latent_neg_entropy(latent: &LatentPosterior) -> Result<f64> {
    let q = latent.rank() as f64;
    let m = latent.z_bar.nrows() as f64;
    let log_det = spd_log_det(&latent.s_z, "latent covariance log-determinant")?;
    Ok(-0.5 * m * (q * (2.0 * PI * E).ln() + log_det))
}

/// KL of column-factorized Gaussian loadings (`Q x D`, column covariances)
/// from a zero-mean prior with per-row Gamma precisions.
pub(crate) fn loadings_kl(v: &VPosterior, ard: &GammaFamily) -> Result<f64> {
    let q = v.v_bar.nrows();
    let prec = ard.means();
    let elog_sum: f64 = ard.expected_logs().sum();
    let mut kl = 0.0;
    for (n, s) in v.s_v.iter().enumerate() {
        let log_det = spd_log_det(s, "readout covariance log-determinant")?;
        let quad: f64 = (0..q)
            .map(|j| prec[j] * (v.v_bar[(j, n)].powi(2) + s[(j, j)]))
            .sum();
        kl += 0.5 * (quad - q as f64 - log_det - elog_sum);
    }
    Ok(kl)
}

/// `-E[log p(Y | Z, V, ω)]` for diagonal Gamma noise.
pub(crate) fn view_neg_loglik(
    m: usize,
    y_sq: &DVector<f64>,
    zty: &DMatrix<f64>,
    ezz: &DMatrix<f64>,
    v: &VPosterior,
    noise: &GammaFamily,
) -> f64 {
    let half = expected_residual_half(y_sq, zty, ezz, v);
    let prec = noise.means();
    let elog = noise.expected_logs();
    let mf = m as f64;
    (0..y_sq.len())
        .map(|n| 0.5 * mf * (2.0 * PI).ln() - 0.5 * mf * elog[n] + prec[n] * half[n])
        .sum()
}

/// KL divergences of every parameter factor.
pub fn kl_terms(posterior: &Posterior, priors: &Priors) -> Result<KlTerms> {
    let log_det_w = spd_log_det(&posterior.w.s_w, "regression covariance log-determinant")?;
    kl_parts(
        &posterior.w,
        log_det_w,
        &posterior.v,
        &posterior.omega,
        &posterior.alpha,
        &posterior.gamma,
        priors,
    )
}

pub(crate) fn kl_parts(
    w: &WPosterior,
    log_det_w: f64,
    v: &VPosterior,
    omega: &GammaFamily,
    alpha: &GammaFamily,
    gamma: &GammaFamily,
    priors: &Priors,
) -> Result<KlTerms> {
    let d = w.w_bar.nrows();
    let alpha_mean = alpha.means();
    let alpha_elog: f64 = alpha.expected_logs().sum();
    let mut kl_w = 0.0;
    for j in 0..w.w_bar.ncols() {
        let quad: f64 = (0..d)
            .map(|k| alpha_mean[k] * (w.w_bar[(k, j)].powi(2) + w.s_w[(k, k)]))
            .sum();
        kl_w += 0.5 * (quad - d as f64 - log_det_w - alpha_elog);
    }
    Ok(KlTerms {
        w: kl_w,
        alpha: alpha.kl_to(&priors.alpha),
        v: loadings_kl(v, gamma)?,
        gamma: gamma.kl_to(&priors.gamma),
        omega: omega.kl_to(&priors.omega),
    })
}

pub fn free_energy(
    design: &LaggedDesign,
    posterior: &Posterior,
    spec: &ModelSpec,
) -> Result<FreeEnergyReport> {
    let priors = Priors::from_spec(spec, design.n)?;
    let latent = &posterior.latent;
    let m = design.m as f64;
    let q = latent.rank() as f64;

    let neg_entropy_z = latent_neg_entropy(latent)?;
    let kl_phi = kl_terms(posterior, &priors)?.total();

    let resid_z = &latent.z_bar - &design.y_minus * &posterior.w.w_bar;
    let neg_avg_loglik_z = 0.5 * m * q * (2.0 * PI).ln()
        + 0.5 * frob2(&resid_z)
        + 0.5 * m * latent.s_z.trace()
        + 0.5 * q * trace_product(&posterior.w.s_w, design.gram());

    let ezz = latent.second_moment();
    let zty = latent.z_bar.tr_mul(&design.y_plus);
    let neg_avg_loglik_y = view_neg_loglik(
        design.m,
        design.target_sq_norms(),
        &zty,
        &ezz,
        &posterior.v,
        &posterior.omega,
    );

    let report = FreeEnergyReport::from_terms(neg_entropy_z, kl_phi, neg_avg_loglik_y, neg_avg_loglik_z);
    check_finite(&report)?;
    Ok(report)
}

pub(crate) fn check_finite(r: &FreeEnergyReport) -> Result<()> {
    for (name, v) in [
        ("latent negative entropy", r.neg_entropy_z),
        ("parameter KL divergence", r.kl_phi),
        ("expected log-likelihood of the targets", r.neg_avg_loglik_y),
        ("expected log-likelihood of the latent signal", r.neg_avg_loglik_z),
    ] {
        if !v.is_finite() {
            return Err(LrmarError::numerical("free energy", format!("{name} term is {v}")));
        }
    }
    Ok(())
}

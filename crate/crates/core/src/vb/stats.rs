//! The update cycle evaluated from second-order statistics of the design.
//!
//! After an E-step the latent means are `z_bar = Y⁻ A + Y⁺ B` with
//! `A = w_bar s_z` and `B = diag(ω) v_bar' s_z`. Every quantity the other
//! updates and the free energy need (`Y⁻'z_bar`, `z_bar'Y⁺`, `z_bar'z_bar`)
//! is then a product of `(A, B)` with the joint Gram matrix of `[Y⁻ Y⁺]`,
//! so a cycle costs nothing per time point.

use std::f64::consts::{E, PI};

use nalgebra::DMatrix;

use super::free_energy::{check_finite, kl_parts, view_neg_loglik};
use super::posterior::{FreeEnergyReport, GammaFamily, Posterior, Priors, VPosterior, WPosterior};
use super::updates::{update_alpha, update_gamma, update_loadings, update_noise};
use crate::design::LaggedDesign;
use crate::error::Result;
use crate::linalg::{spd_inverse, spd_log_det, trace_product};
use crate::spec::ModelSpec;

/// Cross products of regressors and targets.
pub(crate) struct JointGram {
    xy: DMatrix<f64>,
    yy: DMatrix<f64>,
}

impl JointGram {
    pub(crate) fn new(design: &LaggedDesign) -> Self {
        JointGram {
            xy: design.y_minus.tr_mul(&design.y_plus),
            yy: design.y_plus.tr_mul(&design.y_plus),
        }
    }
}

/// Latent posterior held through its coefficients on `[Y⁻ Y⁺]`.
#[derive(Debug, Clone)]
pub(crate) struct LatentStats {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub s_z: DMatrix<f64>,
    /// `Y⁻' z_bar`
    pub xz: DMatrix<f64>,
    /// `z_bar' Y⁺`
    pub zty: DMatrix<f64>,
    /// `z_bar' z_bar`
    pub ztz: DMatrix<f64>,
}

impl LatentStats {
    fn from_coefficients(
        design: &LaggedDesign,
        g: &JointGram,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        s_z: DMatrix<f64>,
    ) -> Self {
        let xz = design.gram() * &a + &g.xy * &b;
        let zty = a.tr_mul(&g.xy) + b.tr_mul(&g.yy);
        let ztz = a.tr_mul(&xz) + &zty * &b;
        let ztz = (&ztz + ztz.transpose()) * 0.5;
        LatentStats { a, b, s_z, xz, zty, ztz }
    }

    fn second_moment(&self, m: usize) -> DMatrix<f64> {
        &self.ztz + &self.s_z * m as f64
    }
}

/// Posterior state of the statistics path.
#[derive(Debug, Clone)]
pub(crate) struct State {
    pub latent: Option<LatentStats>,
    pub w: WPosterior,
    /// `log|s_w|`, kept from the factorization that produced `s_w`.
    pub w_log_det: f64,
    pub v: VPosterior,
    pub omega: GammaFamily,
    pub alpha: GammaFamily,
    pub gamma: GammaFamily,
}

impl State {
    pub(crate) fn from_posterior(p: Posterior) -> Self {
        State {
            latent: None,
            w_log_det: f64::NAN,
            w: p.w,
            v: p.v,
            omega: p.omega,
            alpha: p.alpha,
            gamma: p.gamma,
        }
    }
}

fn e_step(
    design: &LaggedDesign,
    g: &JointGram,
    w: &WPosterior,
    v: &VPosterior,
    omega: &GammaFamily,
) -> Result<LatentStats> {
    let omega_mean = omega.means();
    let q = v.v_bar.nrows();
    let precision = DMatrix::identity(q, q) + v.weighted_inner(&omega_mean);
    let (s_z, _) = spd_inverse(&precision, "latent covariance")?;
    let a = &w.w_bar * &s_z;
    let mut b = v.v_bar.transpose();
    for (n, mut row) in b.row_iter_mut().enumerate() {
        row *= omega_mean[n];
    }
    let b = b * &s_z;
    Ok(LatentStats::from_coefficients(design, g, a, b, s_z))
}

/// One cycle in the order z, W, α, V, Ω, γ.
pub(crate) fn cycle(design: &LaggedDesign, g: &JointGram, s: &mut State, spec: &ModelSpec) -> Result<()> {
    let lat = e_step(design, g, &s.w, &s.v, &s.omega)?;
    let mut precision = design.gram().clone();
    for (k, a) in s.alpha.means().iter().enumerate() {
        precision[(k, k)] += a;
    }
    let (s_w, precision_log_det) = spd_inverse(&precision, "regression factor covariance")?;
    s.w = WPosterior { w_bar: &s_w * &lat.xz, s_w };
    s.w_log_det = -precision_log_det;
    s.alpha = update_alpha(&s.w, spec)?;
    let ezz = lat.second_moment(design.m);
    s.v = update_loadings(&ezz, &lat.zty, &s.omega.means(), &s.gamma.means(), "readout")?;
    let prior = spec.a.resolve(design.outputs(), "a")?;
    s.omega = update_noise(
        spec.iota,
        &prior,
        design.m,
        design.target_sq_norms(),
        &lat.zty,
        &ezz,
        &s.v,
        "noise precision update",
    )?;
    s.gamma = update_gamma(&s.v, spec)?;
    s.latent = Some(lat);
    Ok(())
}

pub(crate) fn free_energy(
    design: &LaggedDesign,
    s: &State,
    priors: &Priors,
) -> Result<FreeEnergyReport> {
    let lat = s.latent.as_ref().expect("free energy needs a latent posterior");
    let m = design.m as f64;
    let q = lat.s_z.nrows() as f64;
    let log_det = spd_log_det(&lat.s_z, "latent covariance log-determinant")?;
    let neg_entropy_z = -0.5 * m * (q * (2.0 * PI * E).ln() + log_det);
    let kl_phi = kl_parts(&s.w, s.w_log_det, &s.v, &s.omega, &s.alpha, &s.gamma, priors)?.total();

    let w_bar = &s.w.w_bar;
    let resid_sq = lat.ztz.trace() - 2.0 * w_bar.dot(&lat.xz) + trace_product(&w_bar.tr_mul(design.gram()), w_bar);
    let neg_avg_loglik_z = 0.5 * m * q * (2.0 * PI).ln()
        + 0.5 * resid_sq
        + 0.5 * m * lat.s_z.trace()
        + 0.5 * q * trace_product(&s.w.s_w, design.gram());

    let ezz = lat.second_moment(design.m);
    let neg_avg_loglik_y =
        view_neg_loglik(design.m, design.target_sq_norms(), &lat.zty, &ezz, &s.v, &s.omega);
    let report = FreeEnergyReport::from_terms(neg_entropy_z, kl_phi, neg_avg_loglik_y, neg_avg_loglik_z);
    check_finite(&report)?;
    Ok(report)
}

/// `from + step * (to - from)` on the means and on the log-rates of the
/// Gamma factors; covariances and shapes come from `to`.
pub(crate) fn over_relax(
    design: &LaggedDesign,
    g: &JointGram,
    from: &State,
    to: &State,
    step: f64,
) -> Option<State> {
    let (lf, lt) = (from.latent.as_ref()?, to.latent.as_ref()?);
    let lerp = |a: &DMatrix<f64>, b: &DMatrix<f64>| a + (b - a) * step;
    let log_lerp = |a: &GammaFamily, b: &GammaFamily| {
        GammaFamily::new(
            b.shape,
            a.rates.zip_map(&b.rates, |x, y| (x.ln() + step * (y.ln() - x.ln())).exp()),
        )
    };
    let latent = LatentStats::from_coefficients(design, g, lerp(&lf.a, &lt.a), lerp(&lf.b, &lt.b), lt.s_z.clone());
    Some(State {
        latent: Some(latent),
        w: WPosterior { w_bar: lerp(&from.w.w_bar, &to.w.w_bar), s_w: to.w.s_w.clone() },
        w_log_det: to.w_log_det,
        v: VPosterior { v_bar: lerp(&from.v.v_bar, &to.v.v_bar), s_v: to.v.s_v.clone() },
        omega: log_lerp(&from.omega, &to.omega),
        alpha: log_lerp(&from.alpha, &to.alpha),
        gamma: log_lerp(&from.gamma, &to.gamma),
    })
}

//! Windowed CCA: a two-view linear-Gaussian latent model
//!
//! ```text
//! z_t ~ N(0, I_Q)
//! x_t ~ N(F' z_t, diag(ω₁)⁻¹)     past window  y_{t-1}..y_{t-P}
//! y_t ~ N(G' z_t, diag(ω₂)⁻¹)     future window y_t..y_{t+L-1}
//! F_{j,d} ~ N(0, 1/γ^F_j),  G_{j,d} ~ N(0, 1/γ^G_j)
//! ```
//!
//! with Gamma priors on every precision. Inference uses the same conjugate
//! loading/noise/ARD updates as the readout of the base model, applied to
//! both views, plus a two-view E-step.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::design::embed_lags;
use crate::error::{LrmarError, Result};
use crate::linalg::{spd_inverse, top_svd};
use crate::series::{center, TimeSeries};
use crate::spec::{InitMethod, ModelSpec};
use crate::vb::{
    check_finite, is_monotone_step, latent_neg_entropy, loadings_kl, scale_columns, update_ard,
    update_loadings, update_noise, view_neg_loglik, FreeEnergyReport, GammaFamily, LatentPosterior,
    VPosterior,
};

const INIT_COV: f64 = 1e-2;

/// Posterior of the two-view model.
#[derive(Debug, Clone, PartialEq)]
pub struct WccaPosterior {
    pub spec: ModelSpec,
    /// `M x Q` latent means.
    pub z_bar: DMatrix<f64>,
    /// `Q x Q` latent covariance shared by all rows.
    pub s_z: DMatrix<f64>,
    /// Loadings onto the first view (past window), `Q x NP` plus per-column covariances.
    pub f: VPosterior,
    /// Loadings onto the second view (future window), `Q x NL` plus per-column covariances.
    pub g: VPosterior,
    pub noise1: GammaFamily,
    pub noise2: GammaFamily,
    pub ard_f: GammaFamily,
    pub ard_g: GammaFamily,
    pub free_energy_trace: Vec<FreeEnergyReport>,
    pub means: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl WccaPosterior {
    pub fn free_energy(&self) -> f64 {
        self.free_energy_trace
            .last()
            .map(|r| r.total)
            .unwrap_or(f64::INFINITY)
    }

    /// Summed prior-relevance `1/γ^F_j + 1/γ^G_j` of every component.
    pub fn relevance(&self) -> DVector<f64> {
        self.ard_f.means().map(|p| 1.0 / p) + self.ard_g.means().map(|p| 1.0 / p)
    }

    fn latent(&self) -> LatentPosterior {
        LatentPosterior {
            z_bar: self.z_bar.clone(),
            s_z: self.s_z.clone(),
        }
    }
}

struct View<'a> {
    data: &'a DMatrix<f64>,
    sq: DVector<f64>,
    noise_prior: GammaFamily,
}

impl<'a> View<'a> {
    fn new(data: &'a DMatrix<f64>, spec: &ModelSpec, what: &str) -> Result<Self> {
        let sq = DVector::from_iterator(data.ncols(), data.column_iter().map(|c| c.norm_squared()));
        Ok(View {
            data,
            sq,
            noise_prior: GammaFamily::new(spec.iota, spec.a.resolve(data.ncols(), what)?),
        })
    }
}

/// Fits the windowed CCA model on a series with past window `P` and future
/// window `L` (`L = P` required).
pub fn fit_wcca(series: &TimeSeries, spec: &ModelSpec) -> Result<WccaPosterior> {
    if spec.l != spec.p {
        return Err(LrmarError::Validation(format!(
            "windowed CCA requires L = P, got P={}, L={}",
            spec.p, spec.l
        )));
    }
    spec.validate_for(series.len(), series.channels())?;
    let centered = center(series)?;
    let design = embed_lags(&centered, spec.p, spec.l)?;
    let mut post = fit_two_view(&design.y_minus, &design.y_plus, spec)?;
    post.means = if series.is_centered() {
        series.means().clone()
    } else {
        centered.means().clone()
    };
    Ok(post)
}

/// Fits the two-view model on arbitrary views with the same number of rows.
/// Uses `spec.q`, the noise prior `(iota, a)`, the ARD prior `(nu, c)` for
/// both views, and the loop controls.
pub fn fit_two_view(
    view1: &DMatrix<f64>,
    view2: &DMatrix<f64>,
    spec: &ModelSpec,
) -> Result<WccaPosterior> {
    if view1.nrows() != view2.nrows() {
        return Err(LrmarError::Dimension(format!(
            "views have {} and {} rows",
            view1.nrows(),
            view2.nrows()
        )));
    }
    let q = spec.q;
    if q == 0 || q > view1.ncols() + view2.ncols() {
        return Err(LrmarError::Validation(format!(
            "Q={q} must be in 1..={}",
            view1.ncols() + view2.ncols()
        )));
    }
    let v1 = View::new(view1, spec, "a (first view)")?;
    let v2 = View::new(view2, spec, "a (second view)")?;
    let ard_prior = GammaFamily::new(spec.nu, spec.c.resolve(q, "c")?);

    let mut post = init(view1, view2, spec, &v1, &v2, &ard_prior);
    let mut trace: Vec<FreeEnergyReport> = Vec::new();
    let mut converged = false;

    for iter in 1..=spec.max_iter {
        let stage = format!("wCCA iteration {iter}");
        cycle(&mut post, &v1, &v2, spec).map_err(|e| e.in_stage(&stage))?;
        let report = free_energy_views(&post, &v1, &v2, &ard_prior).map_err(|e| e.in_stage(&stage))?;
        post.iterations = iter;
        if let Some(prev) = trace.last() {
            if !is_monotone_step(prev.total, report.total) {
                return Err(LrmarError::numerical(
                    stage,
                    format!("free energy increased from {:.12e} to {:.12e}", prev.total, report.total),
                ));
            }
            let rel = (prev.total - report.total).abs() / prev.total.abs().max(f64::MIN_POSITIVE);
            trace.push(report);
            if rel < spec.tol {
                converged = true;
                break;
            }
        } else {
            trace.push(report);
        }
    }
    e_step(&mut post, &v1, &v2).map_err(|e| e.in_stage("wCCA closing E-step"))?;
    let closing = free_energy_views(&post, &v1, &v2, &ard_prior)?;
    trace.push(closing);

    post.free_energy_trace = trace;
    post.converged = converged;
    canonicalize(&mut post);
    Ok(post)
}

/// Free energy of a two-view posterior on the given views.
pub fn wcca_free_energy(
    post: &WccaPosterior,
    view1: &DMatrix<f64>,
    view2: &DMatrix<f64>,
) -> Result<FreeEnergyReport> {
    let v1 = View::new(view1, &post.spec, "a (first view)")?;
    let v2 = View::new(view2, &post.spec, "a (second view)")?;
    let ard_prior = GammaFamily::new(post.spec.nu, post.spec.c.resolve(post.spec.q, "c")?);
    free_energy_views(post, &v1, &v2, &ard_prior)
}

fn init(
    view1: &DMatrix<f64>,
    view2: &DMatrix<f64>,
    spec: &ModelSpec,
    v1: &View,
    v2: &View,
    ard_prior: &GammaFamily,
) -> WccaPosterior {
    let (m, q) = (view1.nrows(), spec.q);
    let (d1, d2) = (view1.ncols(), view2.ncols());
    let joint = DMatrix::from_fn(m, d1 + d2, |i, j| {
        if j < d1 {
            view1[(i, j)]
        } else {
            view2[(i, j - d1)]
        }
    });
    let sqrt_m = (m as f64).sqrt();
    let (u, s, vt) = top_svd(&joint, q);
    let smax = s.iter().copied().fold(0.0, f64::max);
    let rank = s.iter().filter(|&&x| x > smax * 1e-10 && x > 0.0).count();
    let (z_bar, loadings) = if spec.init == InitMethod::Svd && rank >= q {
        (u * sqrt_m, DMatrix::from_fn(q, d1 + d2, |j, n| vt[(j, n)] * s[j] / sqrt_m))
    } else {
        if spec.init == InitMethod::Svd {
            log::warn!("views have joint rank {rank} < Q={q}; using seeded random initialization");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let z = DMatrix::from_fn(m, q, |_, _| StandardNormal.sample(&mut rng));
        let scale = (joint.iter().map(|x| x * x).sum::<f64>() / (m * (d1 + d2)) as f64 / q as f64)
            .sqrt()
            .max(f64::MIN_POSITIVE);
        let l = DMatrix::from_fn(q, d1 + d2, |_, _| {
            let x: f64 = StandardNormal.sample(&mut rng);
            x * scale
        });
        (z, l)
    };
    let cov = DMatrix::identity(q, q) * INIT_COV;
    WccaPosterior {
        spec: spec.clone(),
        z_bar,
        s_z: cov.clone(),
        f: VPosterior { v_bar: loadings.columns(0, d1).into_owned(), s_v: vec![cov.clone(); d1] },
        g: VPosterior { v_bar: loadings.columns(d1, d2).into_owned(), s_v: vec![cov; d2] },
        noise1: v1.noise_prior.clone(),
        noise2: v2.noise_prior.clone(),
        ard_f: ard_prior.clone(),
        ard_g: ard_prior.clone(),
        free_energy_trace: Vec::new(),
        means: DVector::zeros(0),
        converged: false,
        iterations: 0,
    }
}

fn e_step(post: &mut WccaPosterior, v1: &View, v2: &View) -> Result<()> {
    let q = post.spec.q;
    let w1 = post.noise1.means();
    let w2 = post.noise2.means();
    let precision = DMatrix::identity(q, q) + post.f.weighted_inner(&w1) + post.g.weighted_inner(&w2);
    let (s_z, _) = spd_inverse(&precision, "wCCA latent covariance")?;
    let drive = scale_columns(v1.data, &w1) * post.f.v_bar.transpose()
        + scale_columns(v2.data, &w2) * post.g.v_bar.transpose();
    post.z_bar = drive * &s_z;
    post.s_z = s_z;
    Ok(())
}

/// z; F, G; ω₁, ω₂; γ^F, γ^G. Each pair is mutually independent given the
/// latent posterior, so the cycle treats the views symmetrically.
fn cycle(post: &mut WccaPosterior, v1: &View, v2: &View, spec: &ModelSpec) -> Result<()> {
    e_step(post, v1, v2)?;
    let latent = post.latent();
    let ezz = latent.second_moment();
    let zty1 = post.z_bar.tr_mul(v1.data);
    let zty2 = post.z_bar.tr_mul(v2.data);
    let m = v1.data.nrows();

    post.f = update_loadings(&ezz, &zty1, &post.noise1.means(), &post.ard_f.means(), "first-view loadings")?;
    post.g = update_loadings(&ezz, &zty2, &post.noise2.means(), &post.ard_g.means(), "second-view loadings")?;
    post.noise1 = update_noise(
        spec.iota,
        &v1.noise_prior.rates,
        m,
        &v1.sq,
        &zty1,
        &ezz,
        &post.f,
        "first-view noise update",
    )?;
    post.noise2 = update_noise(
        spec.iota,
        &v2.noise_prior.rates,
        m,
        &v2.sq,
        &zty2,
        &ezz,
        &post.g,
        "second-view noise update",
    )?;
    let c = spec.c.resolve(spec.q, "c")?;
    post.ard_f = update_ard(spec.nu, &c, &post.f, "first-view relevance update")?;
    post.ard_g = update_ard(spec.nu, &c, &post.g, "second-view relevance update")?;
    Ok(())
}

fn free_energy_views(
    post: &WccaPosterior,
    v1: &View,
    v2: &View,
    ard_prior: &GammaFamily,
) -> Result<FreeEnergyReport> {
    let latent = post.latent();
    let m = post.z_bar.nrows();
    let q = post.spec.q as f64;
    let ezz = latent.second_moment();
    let neg_entropy_z = latent_neg_entropy(&latent)?;
    let kl_phi = loadings_kl(&post.f, &post.ard_f)?
        + loadings_kl(&post.g, &post.ard_g)?
        + post.ard_f.kl_to(ard_prior)
        + post.ard_g.kl_to(ard_prior)
        + post.noise1.kl_to(&v1.noise_prior)
        + post.noise2.kl_to(&v2.noise_prior);
    let zty1 = post.z_bar.tr_mul(v1.data);
    let zty2 = post.z_bar.tr_mul(v2.data);
    let neg_avg_loglik_y = view_neg_loglik(m, &v1.sq, &zty1, &ezz, &post.f, &post.noise1)
        + view_neg_loglik(m, &v2.sq, &zty2, &ezz, &post.g, &post.noise2);
    let neg_avg_loglik_z = 0.5 * m as f64 * q * (2.0 * PI).ln() + 0.5 * ezz.trace();
    let report = FreeEnergyReport::from_terms(neg_entropy_z, kl_phi, neg_avg_loglik_y, neg_avg_loglik_z);
    check_finite(&report)?;
    Ok(report)
}

/// Orders components by decreasing relevance and flips signs so that the
/// largest-magnitude loading of every component is positive. Both are
/// symmetries of the model, so the free energy is unchanged.
fn canonicalize(post: &mut WccaPosterior) {
    let q = post.spec.q;
    let rel = post.relevance();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| rel[b].partial_cmp(&rel[a]).unwrap_or(std::cmp::Ordering::Equal));
    let signs: Vec<f64> = (0..q)
        .map(|j| {
            let pivot = post
                .f
                .v_bar
                .row(j)
                .iter()
                .chain(post.g.v_bar.row(j).iter())
                .copied()
                .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            if pivot < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    // new index k takes old component order[k] with sign signs[order[k]]
    let perm = DMatrix::from_fn(q, q, |old, new| {
        if order[new] == old {
            signs[old]
        } else {
            0.0
        }
    });
    post.z_bar = &post.z_bar * &perm;
    post.s_z = perm.transpose() * &post.s_z * &perm;
    for loadings in [&mut post.f, &mut post.g] {
        loadings.v_bar = perm.transpose() * &loadings.v_bar;
        for s in loadings.s_v.iter_mut() {
            *s = perm.transpose() * &*s * &perm;
        }
    }
    let reorder = |g: &GammaFamily| {
        GammaFamily::new(g.shape, DVector::from_fn(q, |k, _| g.rates[order[k]]))
    };
    post.ard_f = reorder(&post.ard_f);
    post.ard_g = reorder(&post.ard_g);
}

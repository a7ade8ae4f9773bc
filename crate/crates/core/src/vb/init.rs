use log::warn;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::posterior::{LatentPosterior, Posterior, Priors, VPosterior, WPosterior};
use crate::design::LaggedDesign;
use crate::error::Result;
use crate::linalg::{spd_inverse, top_svd};
use crate::spec::{InitMethod, ModelSpec};

const INIT_RIDGE: f64 = 1e-3;
const INIT_COV: f64 = 1e-2;

/// Starting posterior plus a flag telling whether the random fallback was used.
#[derive(Debug, Clone, PartialEq)]
pub struct InitState {
    pub posterior: Posterior,
    pub random_fallback: bool,
}

/// Initial posterior.
///
/// SVD path: with `y_plus = U S V'`, `v_bar = diag(s/√M) V'_Q` and
/// `z_bar = √M U_Q`, so `z_bar v_bar` is the best rank-`Q` approximation of
/// the targets and the latent scores have unit variance. `w_bar` is the
/// ridge regression of `z_bar` on the regressors. When the targets have
/// rank below `Q`, seeded Gaussian draws replace the SVD.
pub fn init_posterior(design: &LaggedDesign, spec: &ModelSpec) -> Result<InitState> {
    spec.validate_for_design(design)?;
    let priors = Priors::from_spec(spec, design.n)?;
    let (m, q, o) = (design.m, spec.q, design.outputs());
    let sqrt_m = (m as f64).sqrt();

    let (u, s, vt) = top_svd(&design.y_plus, q);
    let smax = s.iter().copied().fold(0.0, f64::max);
    let rank = s.iter().filter(|&&x| x > smax * 1e-10 && x > 0.0).count();

    let mut random_fallback = false;
    let (z_bar, v_bar) = if spec.init == InitMethod::Svd && rank >= q {
        let z_bar = u * sqrt_m;
        let v_bar = DMatrix::from_fn(q, o, |j, n| vt[(j, n)] * s[j] / sqrt_m);
        (z_bar, v_bar)
    } else {
        if spec.init == InitMethod::Svd {
            warn!("targets have rank {rank} < Q={q}; using seeded random initialization");
            random_fallback = true;
        }
        random_init(design, q, spec.seed)
    };

    let mut ridge = design.gram().clone();
    for k in 0..ridge.nrows() {
        ridge[(k, k)] += INIT_RIDGE;
    }
    let (ridge_inv, _) = spd_inverse(&ridge, "initial ridge regression")?;
    let w_bar = ridge_inv * design.y_minus.tr_mul(&z_bar);
    let d = design.inputs();

    Ok(InitState {
        posterior: Posterior {
            latent: LatentPosterior { z_bar, s_z: DMatrix::identity(q, q) * INIT_COV },
            w: WPosterior { w_bar, s_w: DMatrix::identity(d, d) * INIT_COV },
            v: VPosterior { v_bar, s_v: vec![DMatrix::identity(q, q) * INIT_COV; o] },
            omega: priors.omega,
            alpha: priors.alpha,
            gamma: priors.gamma,
        },
        random_fallback,
    })
}

fn random_init(design: &LaggedDesign, q: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = design.m as f64;
    let var = design.target_sq_norms().sum() / (m * design.outputs() as f64);
    let scale = if var > 0.0 { (var / q as f64).sqrt() } else { 1.0 };
    let z_bar = DMatrix::from_fn(design.m, q, |_, _| StandardNormal.sample(&mut rng));
    let v_bar = DMatrix::from_fn(q, design.outputs(), |_, _| {
        let x: f64 = StandardNormal.sample(&mut rng);
        x * scale
    });
    (z_bar, v_bar)
}

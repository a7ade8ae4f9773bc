//! Variational Bayes inference for the low-rank autoregressive model.
//!
//! Generative model, for each effective time point `t`:
//!
//! ```text
//! z_t  ~ N(W' y⁻_t, I_Q)
//! y⁺_t ~ N(V' z_t, diag(ω)⁻¹)
//! W_{k,j} ~ N(0, 1/α_k),  α_k ~ Gamma(κ, b_k)
//! V_{j,n} ~ N(0, 1/γ_j),  γ_j ~ Gamma(ν, c_j)
//! ω_n ~ Gamma(ι, a_n)
//! ```
//!
//! The posterior is approximated by `q(Z) q(W) q(α) q(V) q(ω) q(γ)`.

mod fit;
mod free_energy;
mod init;
mod posterior;
mod predict;
mod stats;
mod updates;

pub use fit::{fit, fit_design, is_monotone_step, update_cycle, MONOTONE_SLACK};
pub use free_energy::{free_energy, kl_terms, KlTerms};
pub use init::{init_posterior, InitState};
pub use posterior::{
    gamma_kl, FittedModel, FreeEnergyReport, GammaFamily, LatentPosterior, Posterior, Priors,
    VPosterior, WPosterior,
};
pub use predict::{predict_one_step, reconstruct, transform};
pub use updates::{update_alpha, update_gamma, update_latent, update_omega, update_v, update_w};

pub(crate) use free_energy::{check_finite, latent_neg_entropy, loadings_kl, view_neg_loglik};
pub(crate) use updates::{scale_columns, update_ard, update_loadings, update_noise};

use log::debug;
use nalgebra::DMatrix;

use super::free_energy::free_energy;
use super::init::init_posterior;
use super::posterior::{FittedModel, FreeEnergyReport, LatentPosterior, Posterior, Priors};
use super::stats::{self, JointGram, State};
use super::updates::{update_alpha, update_gamma, update_latent, update_omega, update_v, update_w};
use crate::design::{embed_lags, LaggedDesign};
use crate::error::{LrmarError, Result};
use crate::series::{center, TimeSeries};
use crate::spec::ModelSpec;

/// Relative slack allowed for round-off when checking that the free energy
/// does not increase between cycles.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// One full update cycle in the fixed order z, W, α, V, Ω, γ.
pub fn update_cycle(design: &LaggedDesign, post: &mut Posterior, spec: &ModelSpec) -> Result<()> {
    post.latent = update_latent(design, &post.w, &post.v, &post.omega)?;
    post.w = update_w(design, &post.latent, &post.alpha)?;
    post.alpha = update_alpha(&post.w, spec)?;
    post.v = update_v(design, &post.latent, &post.omega, &post.gamma)?;
    post.omega = update_omega(design, &post.latent, &post.v, spec)?;
    post.gamma = update_gamma(&post.v, spec)?;
    Ok(())
}

/// Whether `next` is within the monotonicity slack of `prev`.
pub fn is_monotone_step(prev: f64, next: f64) -> bool {
    next <= prev + MONOTONE_SLACK * prev.abs()
}

/// Fits a model: centers, embeds, initializes and iterates update cycles
/// until the relative free-energy change drops below `spec.tol` or
/// `spec.max_iter` cycles have run.
///
/// A closing E-step is applied after the loop so the stored latent means
/// correspond to the final parameter posteriors; its free energy is the
/// last trace entry.
pub fn fit(series: &TimeSeries, spec: &ModelSpec) -> Result<FittedModel> {
    spec.validate_for(series.len(), series.channels())?;
    let centered = center(series)?;
    let design = embed_lags(&centered, spec.p, spec.l)?;
    let mut model = fit_design(&design, spec)?;
    model.means = if series.is_centered() {
        series.means().clone()
    } else {
        centered.means().clone()
    };
    model.channel_names = series.channel_names().to_vec();
    Ok(model)
}

/// Fits on an already embedded design. Means are left at zero.
///
/// The cycles run on second-order statistics of the design (see
/// [`update_cycle`] for the equivalent row-wise form), so their cost does
/// not grow with the series length.
pub fn fit_design(design: &LaggedDesign, spec: &ModelSpec) -> Result<FittedModel> {
    let priors = Priors::from_spec(spec, design.n)?;
    let gram = JointGram::new(design);
    let mut state = State::from_posterior(init_posterior(design, spec)?.posterior);
    let mut trace: Vec<FreeEnergyReport> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut step = 1.0;

    for iter in 1..=spec.max_iter {
        let stage = format!("iteration {iter}");
        let before = spec.accelerate.then(|| state.clone());
        stats::cycle(design, &gram, &mut state, spec).map_err(|e| e.in_stage(&stage))?;
        let mut report = stats::free_energy(design, &state, &priors).map_err(|e| e.in_stage(&stage))?;
        if let Some(before) = before {
            step *= 2.0;
            let better = stats::over_relax(design, &gram, &before, &state, step)
                .and_then(|c| stats::free_energy(design, &c, &priors).ok().map(|r| (c, r)))
                .filter(|(_, r)| r.total < report.total);
            match better {
                Some((c, r)) => {
                    state = c;
                    report = r;
                }
                None => step = 1.0,
            }
        }
        iterations = iter;
        if let Some(prev) = trace.last() {
            if !is_monotone_step(prev.total, report.total) {
                return Err(LrmarError::numerical(
                    stage,
                    format!(
                        "free energy increased from {:.12e} to {:.12e}",
                        prev.total, report.total
                    ),
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

    let mut post = Posterior {
        latent: LatentPosterior { z_bar: DMatrix::zeros(0, 0), s_z: DMatrix::zeros(0, 0) },
        w: state.w,
        v: state.v,
        omega: state.omega,
        alpha: state.alpha,
        gamma: state.gamma,
    };

    post.latent = update_latent(design, &post.w, &post.v, &post.omega)
        .map_err(|e| e.in_stage("closing E-step"))?;
    let closing = free_energy(design, &post, spec).map_err(|e| e.in_stage("closing E-step"))?;
    if let Some(prev) = trace.last() {
        if !is_monotone_step(prev.total, closing.total) {
            return Err(LrmarError::numerical(
                "closing E-step",
                format!("free energy increased from {:.12e} to {:.12e}", prev.total, closing.total),
            ));
        }
    }
    trace.push(closing);
    debug!(
        "fit P={} Q={} L={}: {} cycles, converged={}, F={:.6e}",
        spec.p, spec.q, spec.l, iterations, converged, closing.total
    );

    Ok(FittedModel {
        spec: spec.clone(),
        posterior: post,
        free_energy_trace: trace,
        means: nalgebra::DVector::zeros(design.n),
        channel_names: (1..=design.n).map(|n| format!("ch{n}")).collect(),
        converged,
        iterations,
    })
}

//! Fits one model on simulated data and prints the free-energy terms, the
//! relevance of each component and the explained variance.
//!
//! cargo run --release --example fit_lrmar -- [P] [Q] [seed]

use lrmar::bench::{lrmar_explained_variance, simulate_sinusoids, SinusoidConfig};
use lrmar::{fit, ModelSpec};

fn main() -> lrmar::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let (p, q, seed) = (
        args.first().copied().unwrap_or(6),
        args.get(1).copied().unwrap_or(6),
        args.get(2).copied().unwrap_or(0) as u64,
    );
    let (noisy, clean) = simulate_sinusoids(&SinusoidConfig { seed, ..SinusoidConfig::default() })?;
    let spec = ModelSpec::new(p, q).with_max_iter(50_000).with_acceleration(true);
    let model = fit(&noisy, &spec)?;

    let last = model.free_energy_trace.last().unwrap();
    println!("{} cycles, converged: {}", model.iterations, model.converged);
    println!("F = {:.3}", last.total);
    println!("  latent negative entropy {:.3}", last.neg_entropy_z);
    println!("  parameter KL            {:.3}", last.kl_phi);
    println!("  target log-likelihood   {:.3}", -last.neg_avg_loglik_y);
    println!("  latent log-likelihood   {:.3}", -last.neg_avg_loglik_z);

    println!("component precisions (large = pruned):");
    for (j, g) in model.posterior.gamma.means().iter().enumerate() {
        println!("  {:>2}: {g:.3e}", j + 1);
    }
    println!(
        "explained variance: noisy {:.4}, clean {:.4}",
        lrmar_explained_variance(&model, &noisy, &noisy)?,
        lrmar_explained_variance(&model, &noisy, &clean)?
    );
    Ok(())
}

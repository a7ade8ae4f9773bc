//! Simulated sinusoid mixtures and the PCA baseline.
//!
//! cargo run --release --example simulate_and_pca -- [seed]

use lrmar::bench::{pca_explained_variance, simulate_sinusoids_detailed, SinusoidConfig};

fn main() -> lrmar::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let config = SinusoidConfig { seed, ..SinusoidConfig::default() };
    let draw = simulate_sinusoids_detailed(&config)?;
    println!(
        "T={} N={} sinusoids={} noise_std={}",
        config.t,
        config.n,
        config.n_sinusoids(),
        config.noise_std
    );
    for ch in 0..config.n {
        let used = draw.weights.row(ch).iter().filter(|&&w| w != 0.0).count();
        println!("channel {:>2}: {used} sinusoids, weight sum {:.2}", ch + 1, draw.weights.row(ch).sum());
    }
    println!("{:>3} {:>10} {:>10}", "Q", "EV noisy", "EV clean");
    for q in 1..=config.n {
        let noisy = pca_explained_variance(&draw.noisy, &draw.noisy, q)?;
        let clean = pca_explained_variance(&draw.noisy, &draw.clean, q)?;
        println!("{q:>3} {noisy:>10.4} {clean:>10.4}");
    }
    Ok(())
}

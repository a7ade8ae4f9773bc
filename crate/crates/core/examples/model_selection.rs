//! Free-energy grid search over (P, Q) on simulated sinusoid data.
//!
//! cargo run --release --example model_selection -- [seed] [T] [repeats]

use std::time::Instant;

use lrmar::bench::{simulate_sinusoids, SinusoidConfig};
use lrmar::selection::{grid_select, SelectOptions};
use lrmar::ModelSpec;

fn main() -> lrmar::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: u64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let (seed, t, repeats) = (arg(0, 1), arg(1, 2000) as usize, arg(2, 1) as usize);

    let config = SinusoidConfig { t, seed, ..SinusoidConfig::default() };
    let (noisy, _) = simulate_sinusoids(&config)?;

    let p_values: Vec<usize> = (4..=8).collect();
    let q_values: Vec<usize> = (1..=10).collect();
    let start = Instant::now();
    let grid = grid_select(
        &noisy,
        &p_values,
        &q_values,
        &ModelSpec::new(1, 1).with_seed(seed).with_max_iter(50_000).with_acceleration(true),
        SelectOptions { repeats, workers: 0 },
    )?;

    print!("{:>4}", "P\\Q");
    for q in &q_values {
        print!("{q:>12}");
    }
    println!();
    for &p in &p_values {
        print!("{p:>4}");
        for &q in &q_values {
            let c = grid.cell(p, q).unwrap();
            print!("{:>11.1}{}", c.free_energy, if c.converged { ' ' } else { '*' });
        }
        println!();
    }
    let (p, q) = grid.best()?;
    println!("best P={p} Q={q} ({:.1}s; * = not converged)", start.elapsed().as_secs_f64());
    Ok(())
}

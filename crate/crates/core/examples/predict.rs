//! One-step forecasts on a held-out tail, with the predictive standard
//! deviation of every channel.

use lrmar::bench::{simulate_sinusoids, SinusoidConfig};
use lrmar::vb::predict_one_step;
use lrmar::{fit, ModelSpec, TimeSeries};
use nalgebra::DMatrix;

fn main() -> lrmar::Result<()> {
    let (noisy, _) = simulate_sinusoids(&SinusoidConfig { seed: 2, ..SinusoidConfig::default() })?;
    let (train_len, p) = (3500, 6);
    let train = TimeSeries::new(noisy.data().rows(0, train_len).into_owned())?;
    let model = fit(&train, &ModelSpec::new(p, 6).with_max_iter(50_000).with_acceleration(true))?;

    let y = noisy.data();
    let n = y.ncols();
    let (mut sq_err, mut sq_naive, mut count) = (0.0, 0.0, 0);
    let mut sd = Vec::new();
    for t in train_len..y.nrows() {
        let history = DMatrix::from_fn(p, n, |lag, c| y[(t - 1 - lag, c)] - model.means[c]);
        let (mean, cov) = predict_one_step(&model, &history)?;
        for c in 0..n {
            let truth = y[(t, c)] - model.means[c];
            sq_err += (mean[c] - truth).powi(2);
            sq_naive += (history[(0, c)] - truth).powi(2);
        }
        count += n;
        sd = cov.diagonal().iter().map(|v| v.sqrt()).collect();
    }
    println!("held-out RMSE {:.4}", (sq_err / count as f64).sqrt());
    println!("persistence RMSE {:.4}", (sq_naive / count as f64).sqrt());
    println!("predictive sd per channel: {:.3?}", sd);
    Ok(())
}

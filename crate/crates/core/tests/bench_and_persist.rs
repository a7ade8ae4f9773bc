mod common;

use common::{mar1, rng, series, stable_coefficients, white_noise};
use lrmar::bench::{pca_explained_variance, simulate_sinusoids_detailed, SinusoidConfig};
use lrmar::extensions::fit_wcca;
use lrmar::persist::{load_model, model_from_json, model_to_json, save_model, wcca_from_json, wcca_to_json};
use lrmar::vb::transform;
use lrmar::{fit, ModelSpec};

#[test]
fn sinusoid_draws_match_their_distribution() {
    let mut included = 0usize;
    let mut weight_sum = 0.0;
    let mut cells = 0usize;
    for seed in 0..200 {
        let config = SinusoidConfig { t: 10, seed, ..SinusoidConfig::default() };
        let d = simulate_sinusoids_detailed(&config).unwrap();
        cells += d.weights.len();
        for &w in d.weights.iter().filter(|&&w| w != 0.0) {
            included += 1;
            weight_sum += w;
        }
        let noise = d.noisy.data() - d.clean.data();
        assert!(noise.iter().all(|v| v.is_finite()));
    }
    let rate = included as f64 / cells as f64;
    assert!((rate - 0.4).abs() < 0.02, "inclusion rate {rate}");
    let mean_weight = weight_sum / included as f64;
    assert!((mean_weight - 1.0).abs() < 0.05, "mean weight {mean_weight}");
}

#[test]
fn noise_has_the_configured_spread() {
    let config = SinusoidConfig { t: 4000, noise_std: 0.5, seed: 7, ..SinusoidConfig::default() };
    let d = simulate_sinusoids_detailed(&config).unwrap();
    let noise = d.noisy.data() - d.clean.data();
    let sd = (noise.norm_squared() / noise.len() as f64).sqrt();
    assert!((sd - 0.5).abs() < 0.01, "noise sd {sd}");
}

#[test]
fn pca_explained_variance_grows_to_one() {
    let s = white_noise(4, 500, 5);
    let ev: Vec<f64> = (1..=5).map(|q| pca_explained_variance(&s, &s, q).unwrap()).collect();
    assert!(ev.windows(2).all(|w| w[1] >= w[0]));
    assert!((ev[4] - 1.0).abs() < 1e-12);
}

#[test]
fn model_round_trip_is_lossless() {
    let b = stable_coefficients(&mut rng(2), 3, 0.8);
    let s = series(mar1(&mut rng(3), &b, 400, 1.0).add_scalar(-4.0));
    let model = fit(&s, &ModelSpec::new(2, 2).with_lags(2)).unwrap();
    let back = model_from_json(&model_to_json(&model).unwrap()).unwrap();
    assert_eq!(back, model);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(transform(&loaded, &s).unwrap(), transform(&model, &s).unwrap());
}

#[test]
fn wcca_round_trip_is_lossless() {
    let s = white_noise(5, 300, 3);
    let post = fit_wcca(&s, &ModelSpec::new(2, 2).with_lags(2)).unwrap();
    assert_eq!(wcca_from_json(&wcca_to_json(&post).unwrap()).unwrap(), post);
}

#[test]
fn newer_formats_are_rejected() {
    let s = white_noise(6, 100, 2);
    let model = fit(&s, &ModelSpec::new(1, 1)).unwrap();
    let json = model_to_json(&model).unwrap().replacen("lrmar-model-v1", "lrmar-model-v2", 1);
    assert!(model_from_json(&json).is_err());
}

//! Synthetic sinusoid data, the PCA baseline and evaluation metrics.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::design::embed_lags;
use crate::error::{LrmarError, Result};
use crate::linalg::{frob2, top_svd};
use crate::series::{center, fmt_f64, TimeSeries};
use crate::vb::{reconstruct, transform, FittedModel};

/// Default sinusoid frequencies in cycles per sample.
pub const DEFAULT_FREQUENCIES: [f64; 6] = [0.01, 0.02, 0.035, 0.05, 0.08, 0.12];

/// Channels are random weighted sums of a shared set of sinusoids plus
/// white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidConfig {
    pub t: usize,
    pub n: usize,
    pub frequencies: Vec<f64>,
    pub include_prob: f64,
    pub weight_shape: f64,
    pub weight_rate: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SinusoidConfig {
    fn default() -> Self {
        SinusoidConfig {
            t: 4000,
            n: 12,
            frequencies: DEFAULT_FREQUENCIES.to_vec(),
            include_prob: 0.4,
            weight_shape: 1.0,
            weight_rate: 1.0,
            noise_std: 0.5,
            seed: 0,
        }
    }
}

impl SinusoidConfig {
    pub fn n_sinusoids(&self) -> usize {
        self.frequencies.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.t < 2 || self.n == 0 {
            return Err(LrmarError::Validation(format!(
                "need T >= 2 and N >= 1, got T={}, N={}",
                self.t, self.n
            )));
        }
        if self.frequencies.iter().any(|&f| !(f > 0.0 && f < 0.5)) {
            return Err(LrmarError::Validation("frequencies must lie in (0, 0.5)".into()));
        }
        let mut sorted = self.frequencies.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(LrmarError::Validation("frequencies must be distinct".into()));
        }
        if !(0.0..=1.0).contains(&self.include_prob) {
            return Err(LrmarError::Validation("include_prob must lie in [0, 1]".into()));
        }
        if !(self.weight_shape > 0.0 && self.weight_rate > 0.0) {
            return Err(LrmarError::Validation("weight Gamma parameters must be positive".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(LrmarError::Validation("noise_std must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Per-channel sinusoid mixture actually drawn by [`simulate_sinusoids`].
#[derive(Debug, Clone, PartialEq)]
pub struct SinusoidDraw {
    pub noisy: TimeSeries,
    pub clean: TimeSeries,
    /// `N x K` weights (zero where the sinusoid was not included).
    pub weights: DMatrix<f64>,
    /// `N x K` phases.
    pub phases: DMatrix<f64>,
}

/// Draws a noisy series and its clean counterpart.
pub fn simulate_sinusoids(config: &SinusoidConfig) -> Result<(TimeSeries, TimeSeries)> {
    let d = simulate_sinusoids_detailed(config)?;
    Ok((d.noisy, d.clean))
}

pub fn simulate_sinusoids_detailed(config: &SinusoidConfig) -> Result<SinusoidDraw> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.n_sinusoids();
    let include = Bernoulli::new(config.include_prob).expect("validated probability");
    let weight = Gamma::new(config.weight_shape, 1.0 / config.weight_rate).expect("validated Gamma");
    let mut weights = DMatrix::zeros(config.n, k);
    let mut phases = DMatrix::zeros(config.n, k);
    for ch in 0..config.n {
        for s in 0..k {
            if include.sample(&mut rng) {
                weights[(ch, s)] = weight.sample(&mut rng);
            }
            phases[(ch, s)] = rng.gen_range(0.0..2.0 * PI);
        }
    }
    let clean = DMatrix::from_fn(config.t, config.n, |t, ch| {
        (0..k)
            .map(|s| {
                weights[(ch, s)] * (2.0 * PI * config.frequencies[s] * t as f64 + phases[(ch, s)]).sin()
            })
            .sum()
    });
    let mut noisy = clean.clone();
    if config.noise_std > 0.0 {
        let noise = Normal::new(0.0, config.noise_std).expect("validated noise");
        for v in noisy.iter_mut() {
            *v += noise.sample(&mut rng);
        }
    }
    Ok(SinusoidDraw {
        noisy: TimeSeries::new(noisy)?,
        clean: TimeSeries::new(clean)?,
        weights,
        phases,
    })
}

/// Principal components of a centered matrix: `(components Q x N, scores T x Q)`.
pub fn pca_fit(y: &DMatrix<f64>, q: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if q == 0 || q > y.ncols() {
        return Err(LrmarError::Validation(format!(
            "PCA rank {q} must be in 1..={}",
            y.ncols()
        )));
    }
    let (_, _, components) = top_svd(y, q);
    let scores = y * components.transpose();
    Ok((components, scores))
}

/// `1 - ‖Y - Ŷ‖² / ‖Y‖²`.
pub fn explained_variance(y: &DMatrix<f64>, y_hat: &DMatrix<f64>) -> Result<f64> {
    if y.shape() != y_hat.shape() {
        return Err(LrmarError::Dimension(format!(
            "shapes differ: {:?} vs {:?}",
            y.shape(),
            y_hat.shape()
        )));
    }
    let total = frob2(y);
    if total == 0.0 {
        return Err(LrmarError::Validation(
            "explained variance undefined for an all-zero target".into(),
        ));
    }
    Ok(1.0 - frob2(&(y - y_hat)) / total)
}

/// Lag-1 sample autocorrelation of every column; `None` for constant columns.
pub fn component_smoothness(z: &DMatrix<f64>) -> Result<Vec<Option<f64>>> {
    let m = z.nrows();
    if m < 3 {
        return Err(LrmarError::Dimension(format!(
            "autocorrelation needs at least 3 rows, got {m}"
        )));
    }
    Ok(z.column_iter()
        .map(|c| {
            let mean = c.sum() / m as f64;
            let denom: f64 = c.iter().map(|x| (x - mean).powi(2)).sum();
            if denom == 0.0 {
                return None;
            }
            let num: f64 = (0..m - 1).map(|t| (c[t] - mean) * (c[t + 1] - mean)).sum();
            Some(num / denom)
        })
        .collect())
}

/// Mean of the defined entries of [`component_smoothness`].
pub fn mean_smoothness(z: &DMatrix<f64>) -> Result<Option<f64>> {
    let vals: Vec<f64> = component_smoothness(z)?.into_iter().flatten().collect();
    if vals.is_empty() {
        Ok(None)
    } else {
        Ok(Some(vals.iter().sum::<f64>() / vals.len() as f64))
    }
}

/// Explained variance of the model's reconstruction
/// `reconstruct(transform(series))` against the lag-embedded targets of
/// `target` (centered with its own means).
pub fn lrmar_explained_variance(model: &FittedModel, series: &TimeSeries, target: &TimeSeries) -> Result<f64> {
    let z = transform(model, series)?;
    let y_hat = reconstruct(model, &z, false)?;
    let target = embed_lags(&center(target)?, model.spec.p, model.spec.l)?;
    explained_variance(&target.y_plus, &y_hat)
}

/// Explained variance of a `Q`-component PCA fitted on `series` against `target`.
pub fn pca_explained_variance(series: &TimeSeries, target: &TimeSeries, q: usize) -> Result<f64> {
    let y = center(series)?;
    let (components, scores) = pca_fit(y.data(), q)?;
    let y_hat = scores * components;
    explained_variance(center(target)?.data(), &y_hat)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Noisy,
    Clean,
}

impl Target {
    pub fn as_str(&self) -> &'static str {
        match self {
            Target::Noisy => "noisy",
            Target::Clean => "clean",
        }
    }
}

/// One line of benchmark output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: String,
    pub q: usize,
    pub p: usize,
    pub target: Target,
    pub explained_variance: f64,
    pub seed: u64,
}

/// Writes records as CSV: `method,Q,P,target,explained_variance,seed`.
pub fn write_bench_csv<W: Write>(writer: W, records: &[BenchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "Q", "P", "target", "explained_variance", "seed"])?;
    for r in records {
        w.write_record([
            r.method.clone(),
            r.q.to_string(),
            r.p.to_string(),
            r.target.as_str().to_string(),
            fmt_f64(r.explained_variance),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

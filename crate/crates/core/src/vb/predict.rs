use nalgebra::{DMatrix, DVector};

use super::posterior::FittedModel;
use super::updates::update_latent;
use crate::design::embed_lags;
use crate::error::{LrmarError, Result};
use crate::series::TimeSeries;

/// Predictive mean and covariance of the next `L` samples.
///
/// `history` is `P x N` with the most recent sample first, in centered
/// units. The mean is `v_bar' w_bar' x` with `x` the stacked history; the
/// covariance is `diag(E[1/ω]) + E[V'V]`.
pub fn predict_one_step(
    model: &FittedModel,
    history: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (p, n) = (model.spec.p, model.channels());
    if history.nrows() != p || history.ncols() != n {
        return Err(LrmarError::Dimension(format!(
            "history must be {p}x{n}, got {}x{}",
            history.nrows(),
            history.ncols()
        )));
    }
    let post = &model.posterior;
    let variances = post.omega.reciprocal_means().ok_or_else(|| {
        LrmarError::numerical(
            "predictive covariance",
            format!(
                "posterior noise variance undefined: noise shape {} <= 1",
                post.omega.shape
            ),
        )
    })?;
    // Row-major flattening of a most-recent-first history is exactly one
    // lag-major regressor row.
    let x = DVector::from_iterator(n * p, history.transpose().iter().copied());
    let latent_mean = post.w.w_bar.tr_mul(&x);
    let mean = post.v.v_bar.tr_mul(&latent_mean);
    let cov = DMatrix::from_diagonal(&variances) + post.v.second_moment_outer();
    Ok((mean, cov))
}

/// Latent means of a new series under the fitted posterior (one E-step, no
/// refitting). The series is centered with the stored training means.
pub fn transform(model: &FittedModel, series: &TimeSeries) -> Result<DMatrix<f64>> {
    if series.channels() != model.channels() {
        return Err(LrmarError::Dimension(format!(
            "model has {} channels, series has {}",
            model.channels(),
            series.channels()
        )));
    }
    let centered = series.center_with(&model.means)?;
    let design = embed_lags(&centered, model.spec.p, model.spec.l)?;
    let post = &model.posterior;
    Ok(update_latent(&design, &post.w, &post.v, &post.omega)?.z_bar)
}

/// `z v_bar`; with `original_units` the stored channel means are added back
/// to every lag block.
pub fn reconstruct(model: &FittedModel, z: &DMatrix<f64>, original_units: bool) -> Result<DMatrix<f64>> {
    let v = &model.posterior.v.v_bar;
    if z.ncols() != v.nrows() {
        return Err(LrmarError::Dimension(format!(
            "latent matrix has {} columns, model rank is {}",
            z.ncols(),
            v.nrows()
        )));
    }
    let mut y = z * v;
    if original_units {
        let n = model.channels();
        for (col, mut c) in y.column_iter_mut().enumerate() {
            c.add_scalar_mut(model.means[col % n]);
        }
    }
    Ok(y)
}

use nalgebra::DMatrix;

use crate::error::{LrmarError, Result};
use crate::series::TimeSeries;
use crate::spec::ModelSpec;
use crate::vb::{fit, FittedModel};

/// Fits the model with targets `[y_t, ..., y_{t+L-1}]`.
///
/// The update machinery is the base one with `N·L` target columns, a
/// `Q x NL` readout and `N·L` noise precisions. With `L = 1` the result is
/// identical to [`fit`].
pub fn fit_multilag(series: &TimeSeries, spec: &ModelSpec) -> Result<FittedModel> {
    if spec.l == 0 {
        return Err(LrmarError::Validation("L must be at least 1".into()));
    }
    fit(series, spec)
}

/// Readout columns for output lag `lag` (1-based), a `Q x N` block.
pub fn readout_block(model: &FittedModel, lag: usize) -> Result<DMatrix<f64>> {
    let n = model.channels();
    if lag == 0 || lag > model.spec.l {
        return Err(LrmarError::Dimension(format!(
            "lag {lag} outside 1..={}",
            model.spec.l
        )));
    }
    Ok(model
        .posterior
        .v
        .v_bar
        .columns((lag - 1) * n, n)
        .into_owned())
}

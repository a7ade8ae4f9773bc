//! Lag embedding of a time series into autoregression design matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{LrmarError, Result};
use crate::series::TimeSeries;

/// Target and regressor matrices for an order-`p` autoregression that
/// predicts `l` consecutive samples.
///
/// With `t = p + m` (0-based time of row `m`):
/// * `y_minus` row `m` is `[y_{t-1}, y_{t-2}, ..., y_{t-p}]` (lag-major blocks of `n` columns)
/// * `y_plus`  row `m` is `[y_t, y_{t+1}, ..., y_{t+l-1}]`
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedDesign {
    pub y_plus: DMatrix<f64>,
    pub y_minus: DMatrix<f64>,
    pub m: usize,
    pub p: usize,
    pub l: usize,
    pub n: usize,
    gram: DMatrix<f64>,
    target_sq: DVector<f64>,
}

impl LaggedDesign {
    /// Builds a design directly from matrices. Used for the two-view model
    /// and for tests that need hand-crafted regressors.
    pub fn from_parts(
        y_plus: DMatrix<f64>,
        y_minus: DMatrix<f64>,
        p: usize,
        l: usize,
        n: usize,
    ) -> Result<Self> {
        if y_plus.nrows() != y_minus.nrows() {
            return Err(LrmarError::Dimension(format!(
                "target has {} rows but regressors have {}",
                y_plus.nrows(),
                y_minus.nrows()
            )));
        }
        if y_plus.ncols() != n * l || y_minus.ncols() != n * p {
            return Err(LrmarError::Dimension(format!(
                "expected {}x{} targets and {}x{} regressors, got {}x{} and {}x{}",
                y_plus.nrows(),
                n * l,
                y_minus.nrows(),
                n * p,
                y_plus.nrows(),
                y_plus.ncols(),
                y_minus.nrows(),
                y_minus.ncols()
            )));
        }
        let gram = y_minus.tr_mul(&y_minus);
        let target_sq = DVector::from_iterator(
            y_plus.ncols(),
            y_plus.column_iter().map(|c| c.norm_squared()),
        );
        Ok(LaggedDesign {
            m: y_plus.nrows(),
            y_plus,
            y_minus,
            p,
            l,
            n,
            gram,
            target_sq,
        })
    }

    /// `y_minus' y_minus`, computed once.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Squared norm of every target column.
    pub fn target_sq_norms(&self) -> &DVector<f64> {
        &self.target_sq
    }

    /// Number of target columns, `n * l`.
    pub fn outputs(&self) -> usize {
        self.n * self.l
    }

    /// Number of regressor columns, `n * p`.
    pub fn inputs(&self) -> usize {
        self.n * self.p
    }

    /// Column of `y_minus` holding channel `channel` at lag `lag` (1-based lag).
    pub fn regressor_column(&self, lag: usize, channel: usize) -> usize {
        (lag - 1) * self.n + channel
    }
}

/// Smallest series length that supports order `p` with `l` output lags.
pub fn min_length(p: usize, l: usize) -> usize {
    p + l + 1
}

/// Lag-embeds a series. The series is expected to be centered already;
/// values are used as given.
pub fn embed_lags(series: &TimeSeries, p: usize, l: usize) -> Result<LaggedDesign> {
    if p == 0 || l == 0 {
        return Err(LrmarError::Validation(format!(
            "autoregression order and output lags must be positive (P={p}, L={l})"
        )));
    }
    let t = series.len();
    if t < min_length(p, l) {
        return Err(LrmarError::Dimension(format!(
            "series of length {t} too short for P={p}, L={l}: need T >= {}",
            min_length(p, l)
        )));
    }
    let n = series.channels();
    let m = t - p - l + 1;
    let y = series.data();
    let y_minus = DMatrix::from_fn(m, n * p, |row, col| {
        let lag = col / n + 1;
        let ch = col % n;
        y[(p + row - lag, ch)]
    });
    let y_plus = DMatrix::from_fn(m, n * l, |row, col| {
        let ahead = col / n;
        let ch = col % n;
        y[(p + row + ahead, ch)]
    });
    LaggedDesign::from_parts(y_plus, y_minus, p, l, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp() -> TimeSeries {
        TimeSeries::new(DMatrix::from_column_slice(5, 1, &[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap()
    }

    #[test]
    fn single_output_lag() {
        let d = embed_lags(&ramp(), 2, 1).unwrap();
        assert_eq!(d.m, 3);
        assert_eq!(d.y_plus, DMatrix::from_row_slice(3, 1, &[3.0, 4.0, 5.0]));
        assert_eq!(
            d.y_minus,
            DMatrix::from_row_slice(3, 2, &[2.0, 1.0, 3.0, 2.0, 4.0, 3.0])
        );
    }

    #[test]
    fn two_output_lags() {
        let d = embed_lags(&ramp(), 2, 2).unwrap();
        assert_eq!(d.m, 2);
        assert_eq!(d.y_plus, DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 4.0, 5.0]));
        assert_eq!(d.y_minus, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 3.0, 2.0]));
    }

    #[test]
    fn too_short_reports_minimum() {
        let s = TimeSeries::new(DMatrix::from_fn(3, 2, |i, j| (i + j) as f64)).unwrap();
        let err = embed_lags(&s, 2, 1).unwrap_err();
        assert!(matches!(err, LrmarError::Dimension(_)));
        assert!(err.to_string().contains("T >= 4"), "{err}");
    }

    #[test]
    fn gram_is_cached_product() {
        let d = embed_lags(&ramp(), 2, 1).unwrap();
        assert_eq!(d.gram(), &(d.y_minus.transpose() * &d.y_minus));
    }

    fn series_strategy() -> impl Strategy<Value = (TimeSeries, usize, usize)> {
        (1usize..4, 1usize..4, 1usize..4, 0usize..6).prop_flat_map(|(n, p, l, extra)| {
            let t = p + l + 1 + extra;
            proptest::collection::vec(-10.0f64..10.0, t * n).prop_map(move |v| {
                (
                    TimeSeries::new(DMatrix::from_row_slice(t, n, &v)).unwrap(),
                    p,
                    l,
                )
            })
        })
    }

    proptest! {
        #[test]
        fn first_block_recovers_series((s, p, l) in series_strategy()) {
            let d = embed_lags(&s, p, l).unwrap();
            prop_assert_eq!(d.m, s.len() - p - l + 1);
            for m in 0..d.m {
                for ch in 0..s.channels() {
                    prop_assert_eq!(d.y_plus[(m, ch)], s.data()[(p + m, ch)]);
                }
            }
        }

        #[test]
        fn single_lag_matches_general_case((s, p, _l) in series_strategy()) {
            let one = embed_lags(&s, p, 1).unwrap();
            let n = s.channels();
            for m in 0..one.m {
                for ch in 0..n {
                    prop_assert_eq!(one.y_plus[(m, ch)], s.data()[(p + m, ch)]);
                    for lag in 1..=p {
                        prop_assert_eq!(one.y_minus[(m, one.regressor_column(lag, ch))], s.data()[(p + m - lag, ch)]);
                    }
                }
            }
        }

        #[test]
        fn channel_permutation_permutes_blocks((s, p, l) in series_strategy()) {
            let n = s.channels();
            let perm: Vec<usize> = (0..n).rev().collect();
            let ps = s.select_channels(&perm).unwrap();
            let d = embed_lags(&s, p, l).unwrap();
            let dp = embed_lags(&ps, p, l).unwrap();
            for m in 0..d.m {
                for (new, &old) in perm.iter().enumerate() {
                    for block in 0..l {
                        prop_assert_eq!(dp.y_plus[(m, block * n + new)], d.y_plus[(m, block * n + old)]);
                    }
                    for block in 0..p {
                        prop_assert_eq!(dp.y_minus[(m, block * n + new)], d.y_minus[(m, block * n + old)]);
                    }
                }
            }
        }
    }
}

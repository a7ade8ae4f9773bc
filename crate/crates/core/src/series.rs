//! Multichannel time series container, centering and CSV ingestion.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{LrmarError, Result};

/// A `T x N` real time series (rows are time points, columns channels).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    data: DMatrix<f64>,
    channel_names: Vec<String>,
    means: DVector<f64>,
    centered: bool,
}

impl TimeSeries {
    /// Builds an uncentered series with default channel names `ch1..chN`.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let names = (1..=data.ncols()).map(|n| format!("ch{n}")).collect();
        Self::with_names(data, names)
    }

    pub fn with_names(data: DMatrix<f64>, channel_names: Vec<String>) -> Result<Self> {
        validate(&data)?;
        if channel_names.len() != data.ncols() {
            return Err(LrmarError::Dimension(format!(
                "{} channel names for {} channels",
                channel_names.len(),
                data.ncols()
            )));
        }
        let n = data.ncols();
        Ok(TimeSeries {
            data,
            channel_names,
            means: DVector::zeros(n),
            centered: false,
        })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    /// Column means removed by [`center`]; zeros if nothing was removed.
    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    /// Subtracts the given per-channel means instead of the sample means.
    ///
    /// Used when a fitted model is applied to new data.
    pub fn center_with(&self, means: &DVector<f64>) -> Result<TimeSeries> {
        if means.len() != self.channels() {
            return Err(LrmarError::Dimension(format!(
                "{} stored means for a series with {} channels",
                means.len(),
                self.channels()
            )));
        }
        let mut data = self.data.clone();
        for (j, mut col) in data.column_iter_mut().enumerate() {
            col.add_scalar_mut(-means[j]);
        }
        Ok(TimeSeries {
            data,
            channel_names: self.channel_names.clone(),
            means: means.clone(),
            centered: true,
        })
    }

    /// Keeps only the listed channels, in the given order.
    pub fn select_channels(&self, idx: &[usize]) -> Result<TimeSeries> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.channels()) {
            return Err(LrmarError::Dimension(format!("channel index {bad} out of range")));
        }
        let data = self.data.select_columns(idx);
        let names = idx.iter().map(|&i| self.channel_names[i].clone()).collect();
        let means = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.means[i]));
        Ok(TimeSeries {
            data,
            channel_names: names,
            means,
            centered: self.centered,
        })
    }

    /// Reads a comma-separated file. A first row containing any non-numeric
    /// field is taken as the header of channel names.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<TimeSeries> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<TimeSeries> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut names: Option<Vec<String>> = None;
        let mut values: Vec<f64> = Vec::new();
        let mut width = 0usize;
        let mut rows = 0usize;
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if line == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
                names = Some(record.iter().map(str::to_owned).collect());
                width = record.len();
                continue;
            }
            if width == 0 {
                width = record.len();
            }
            if record.len() != width {
                return Err(LrmarError::Format(format!(
                    "line {}: expected {width} fields, found {}",
                    line + 1,
                    record.len()
                )));
            }
            for (col, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    LrmarError::Format(format!(
                        "line {}, column {}: cannot parse {field:?} as a number",
                        line + 1,
                        col + 1
                    ))
                })?;
                values.push(v);
            }
            rows += 1;
        }
        if rows == 0 {
            return Err(LrmarError::Format("no data rows".into()));
        }
        let data = DMatrix::from_row_slice(rows, width, &values);
        match names {
            Some(n) => Self::with_names(data, n),
            None => Self::new(data),
        }
    }

    /// Writes a header of channel names followed by one row per time point.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_matrix_csv(writer, Some(&self.channel_names), &self.data)
    }
}

fn validate(data: &DMatrix<f64>) -> Result<()> {
    if data.nrows() < 2 {
        return Err(LrmarError::Dimension(format!(
            "time series needs at least 2 time points, got {}",
            data.nrows()
        )));
    }
    if data.ncols() < 1 {
        return Err(LrmarError::Dimension("time series needs at least 1 channel".into()));
    }
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            if !data[(i, j)].is_finite() {
                return Err(LrmarError::Validation(format!(
                    "non-finite value at row {}, column {}",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// Removes the column means. The subtracted means are stored on the result.
///
/// Centering an already centered series leaves the data untouched and
/// reports zero means.
pub fn center(series: &TimeSeries) -> Result<TimeSeries> {
    validate(&series.data)?;
    if series.centered {
        let mut out = series.clone();
        out.means = DVector::zeros(series.channels());
        return Ok(out);
    }
    let t = series.len() as f64;
    let means = DVector::from_iterator(
        series.channels(),
        series.data.column_iter().map(|c| c.sum() / t),
    );
    series.center_with(&means)
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a matrix as CSV with an optional header row.
pub fn write_matrix_csv<W: Write>(
    writer: W,
    header: Option<&[String]>,
    data: &DMatrix<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for row in data.row_iter() {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV matrix, skipping a leading non-numeric header row.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let s = TimeSeries::from_csv_reader(reader);
    match s {
        Ok(ts) => Ok(ts.data),
        // A single-row matrix is legal here even though it is not a series.
        Err(LrmarError::Dimension(_)) => Err(LrmarError::Format(
            "matrix CSV needs at least two rows".into(),
        )),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_removes_mean() {
        let s = TimeSeries::new(DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0])).unwrap();
        let c = center(&s).unwrap();
        assert!(c.is_centered());
        assert_eq!(c.data().as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(c.means()[0], 2.0);
    }

    #[test]
    fn center_is_idempotent() {
        let s = TimeSeries::new(DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0])).unwrap();
        let c = center(&s).unwrap();
        let cc = center(&c).unwrap();
        assert_eq!(cc.data(), c.data());
        assert!(cc.means().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn center_constant_channels() {
        let s = TimeSeries::new(DMatrix::from_column_slice(
            3,
            2,
            &[0.0, 0.0, 0.0, 5.0, 5.0, 5.0],
        ))
        .unwrap();
        let c = center(&s).unwrap();
        assert!(c.data().iter().all(|&v| v == 0.0));
        assert_eq!(c.means().as_slice(), &[0.0, 5.0]);
    }

    #[test]
    fn non_finite_input_names_position() {
        let err = TimeSeries::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, f64::NAN, 0.0]))
            .unwrap_err();
        assert!(matches!(err, LrmarError::Validation(_)));
        assert!(err.to_string().contains("row 2, column 1"), "{err}");
    }

    #[test]
    fn too_short_series_rejected() {
        assert!(TimeSeries::new(DMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn csv_with_and_without_header() {
        let with = "a,b\n1,2\n3,4\n5,6\n";
        let s = TimeSeries::from_csv_reader(with.as_bytes()).unwrap();
        assert_eq!(s.channel_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.data()[(2, 1)], 6.0);

        let without = "1,2\n3,4\n";
        let s = TimeSeries::from_csv_reader(without.as_bytes()).unwrap();
        assert_eq!(s.channel_names()[1], "ch2");
        assert_eq!(s.data()[(1, 0)], 3.0);
    }

    #[test]
    fn csv_missing_value_rejected() {
        let bad = "1,2\n3,\n";
        let err = TimeSeries::from_csv_reader(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, LrmarError::Format(_)));
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let data = DMatrix::from_fn(4, 3, |i, j| (i as f64 + 0.1).sin() * 1e3 / (j as f64 + 3.0));
        let s = TimeSeries::new(data).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = TimeSeries::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back.data(), s.data());
    }
}

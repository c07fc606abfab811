//! Sample matrices and their CSV form.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `T` observations of an `N`-vector, one row per observation.
///
/// Storage is column-major so that each channel is a contiguous slice.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: DMatrix<f64>,
    channel_names: Option<Vec<String>>,
}

/// Checks shape and finiteness of a raw `T x N` matrix.
pub fn validate_dataset(raw: DMatrix<f64>) -> Result<Dataset> {
    if raw.ncols() == 0 {
        return Err(Error::EmptyChannels);
    }
    if raw.nrows() < 2 {
        return Err(Error::TooFewSamples {
            got: raw.nrows(),
            need: 2,
        });
    }
    for col in 0..raw.ncols() {
        for row in 0..raw.nrows() {
            if !raw[(row, col)].is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
    }
    Ok(Dataset {
        samples: raw,
        channel_names: None,
    })
}

impl Dataset {
    pub fn new(samples: DMatrix<f64>) -> Result<Self> {
        validate_dataset(samples)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        validate_dataset(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
    }

    /// Builds a dataset from per-channel columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let t = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != t) {
            return Err(Error::DimensionMismatch {
                expected: t,
                got: bad.len(),
            });
        }
        let flat: Vec<f64> = columns.iter().flatten().copied().collect();
        validate_dataset(DMatrix::from_vec(t, columns.len(), flat))
    }

    pub fn with_channel_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_channels() {
            return Err(Error::DimensionMismatch {
                expected: self.n_channels(),
                got: names.len(),
            });
        }
        self.channel_names = Some(names);
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.samples.ncols()
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn channel_names(&self) -> Option<&[String]> {
        self.channel_names.as_deref()
    }

    /// Names used on output: the stored ones, else `prefix0, prefix1, ...`.
    pub fn names_or(&self, prefix: &str) -> Vec<String> {
        match &self.channel_names {
            Some(names) => names.clone(),
            None => (0..self.n_channels()).map(|j| format!("{prefix}{j}")).collect(),
        }
    }

    /// Contiguous samples of channel `j`.
    pub fn channel(&self, j: usize) -> &[f64] {
        let t = self.n_samples();
        &self.samples.as_slice()[j * t..(j + 1) * t]
    }

    /// `Y = X Bᵀ`, i.e. `y_t = B x_t` for every observation.
    pub fn transform(&self, b: &DMatrix<f64>) -> Result<Dataset> {
        if b.ncols() != self.n_channels() {
            return Err(Error::DimensionMismatch {
                expected: self.n_channels(),
                got: b.ncols(),
            });
        }
        validate_dataset(&self.samples * b.transpose())
    }

    /// Copy with every channel shifted to zero sample mean.
    pub fn centered(&self) -> Dataset {
        let mut samples = self.samples.clone();
        for mut col in samples.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        Dataset {
            samples,
            channel_names: self.channel_names.clone(),
        }
    }

    /// Copy keeping only the given channels, in the given order.
    pub fn select_channels(&self, idx: &[usize]) -> Result<Dataset> {
        let cols: Vec<Vec<f64>> = idx.iter().map(|&j| self.channel(j).to_vec()).collect();
        let out = Dataset::from_columns(&cols)?;
        match &self.channel_names {
            Some(names) => out.with_channel_names(idx.iter().map(|&j| names[j].clone()).collect()),
            None => Ok(out),
        }
    }

    /// Reads CSV with a header row of channel names.
    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
            return Err(Error::EmptyChannels);
        }
        let mut flat = Vec::new();
        let mut rows = 0;
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            for (col, field) in record.iter().enumerate() {
                let v = field.trim().parse::<f64>().unwrap_or(f64::NAN);
                if !v.is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
                flat.push(v);
            }
            rows += 1;
        }
        let raw = DMatrix::from_row_slice(rows, names.len(), &flat);
        validate_dataset(raw)?.with_channel_names(names)
    }

    /// Writes CSV with a header row; floats use the shortest round-trip form.
    pub fn write_csv<W: Write>(&self, writer: W, default_prefix: &str) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(self.names_or(default_prefix))?;
        let mut buf = Vec::with_capacity(self.n_channels());
        for row in self.samples.row_iter() {
            buf.clear();
            buf.extend(row.iter().map(|v| format!("{v:?}")));
            wtr.write_record(&buf)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_well_formed_matrix() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(d.n_samples(), 3);
        assert_eq!(d.n_channels(), 2);
        assert_eq!(d.channel(1), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn reports_nan_position() {
        let err = Dataset::from_rows(&[vec![0.0, 1.0], vec![f64::NAN, 1.0], vec![0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
    }

    #[test]
    fn rejects_single_row() {
        let err = validate_dataset(DMatrix::from_row_slice(1, 4, &[1.0, 2.0, 3.0, 4.0])).unwrap_err();
        assert!(matches!(err, Error::TooFewSamples { got: 1, need: 2 }));
    }

    #[test]
    fn rejects_zero_channels() {
        let err = validate_dataset(DMatrix::zeros(5, 0)).unwrap_err();
        assert!(matches!(err, Error::EmptyChannels));
    }

    #[test]
    fn transform_applies_rows() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 1.0]);
        let y = d.transform(&b).unwrap();
        assert_eq!(y.channel(0), &[2.0, -2.0]);
        assert_eq!(y.channel(1), &[3.0, -0.5]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = Dataset::from_rows(&[vec![0.1, -2.5e-17], vec![1.0 / 3.0, 7.0]])
            .unwrap()
            .with_channel_names(vec!["a".into(), "b".into()])
            .unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf, "x").unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn csv_with_garbage_field_is_non_finite() {
        let text = "a,b\n1,2\n3,oops\n";
        let err = Dataset::read_csv(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 1 }));
    }
}

use nalgebra::DMatrix;

use crate::error::{LrvError, Result};

/// A `T x p` matrix of score observations; row `t` holds `V_t'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    data: DMatrix<f64>,
}

impl ScoreMatrix {
    /// Wraps a `T x p` matrix, rejecting non-finite entries and `T < 2p`.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (t, p) = data.shape();
        if p == 0 {
            return Err(LrvError::InvalidInput("score matrix has no columns".into()));
        }
        if t < 2 * p || t < 2 {
            return Err(LrvError::InvalidInput(format!(
                "need T >= 2p observations, got T={t}, p={p}"
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LrvError::InvalidInput(format!(
                "non-finite score at row {}, column {}",
                pos % t,
                pos / t
            )));
        }
        Ok(Self { data })
    }

    /// Single series.
    pub fn from_series(series: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(series.len(), 1, series))
    }

    /// Builds from row vectors (each of length `p`).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(LrvError::InvalidInput("ragged score rows".into()));
        }
        Self::new(DMatrix::from_fn(t, p, |i, j| rows[i][j]))
    }

    pub fn t(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// Column `r` copied into a vector.
    pub fn series(&self, r: usize) -> Vec<f64> {
        self.data.column(r).iter().copied().collect()
    }

    /// Returns `c * V`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: &self.data * c,
        }
    }

    /// Column-demeaned copy.
    pub fn demeaned(&self) -> Self {
        let mut data = self.data.clone();
        for mut col in data.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        Self { data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_short_samples() {
        assert!(ScoreMatrix::from_series(&[1.0, f64::NAN, 2.0]).is_err());
        assert!(ScoreMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).is_err());
        assert!(ScoreMatrix::from_series(&[1.0, 2.0]).is_ok());
    }

    #[test]
    fn demeaned_columns_sum_to_zero() {
        let v = ScoreMatrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 7.0], vec![6.0, 1.0], vec![3.0, 3.0]])
            .unwrap()
            .demeaned();
        for c in v.matrix().column_iter() {
            assert!(c.sum().abs() < 1e-12);
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::MAX_DIM;

/// `n` observations in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    /// Wraps a flat row-major buffer of `n * dim` coordinates.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidInput(format!(
                "sample dimension {dim} not in 1..=3"
            )));
        }
        if data.is_empty() {
            return Err(Error::Degenerate("sample has no observations".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim.max(1), data)
    }

    /// Univariate sample.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Sample formed by the given row indices (with repetition).
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        Self {
            dim: self.dim,
            data,
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut m = vec![0.0; self.dim];
        for p in self.points() {
            for (acc, v) in m.iter_mut().zip(p) {
                *acc += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Unbiased per-coordinate variances; requires `n >= 2`.
    pub fn variances(&self) -> Result<Vec<f64>> {
        let n = self.len();
        if n < 2 {
            return Err(Error::Degenerate(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        let mean = self.mean();
        let mut var = vec![0.0; self.dim];
        for p in self.points() {
            for k in 0..self.dim {
                let d = p[k] - mean[k];
                var[k] += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v /= (n - 1) as f64);
        Ok(var)
    }

    /// Componentwise `(min, max)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, v)| v + shift[i % self.dim])
            .collect();
        Self {
            dim: self.dim,
            data,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

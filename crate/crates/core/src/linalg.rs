//! Fixed-size symmetric matrices for dimensions one to three, with closed-form
//! eigenvalues, determinants and inverses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// A symmetric `dim × dim` matrix stored in the top-left block of a 3×3 array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    m: [[f64; 3]; 3],
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1, 2 or 3");
        Self {
            dim,
            m: [[0.0; 3]; 3],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.m[i][i] = 1.0;
        }
        out
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut out = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            out.m[i][i] = v;
        }
        out
    }

    /// Builds a matrix from rows, rejecting asymmetry beyond `1e-9`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidInput(format!(
                "matrix dimension {dim} not in 1..=3"
            )));
        }
        let mut out = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { index: i * dim + j, value: v });
                }
                out.m[i][j] = v;
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (out.m[i][j] - out.m[j][i]).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric: entry ({i},{j}) = {} but ({j},{i}) = {}",
                        out.m[i][j], out.m[j][i]
                    )));
                }
            }
        }
        Ok(out.symmetrized())
    }

    /// Wraps a raw array without checks; callers guarantee symmetry.
    pub(crate) fn from_array(dim: usize, m: [[f64; 3]; 3]) -> Self {
        Self { dim, m }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.m[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
        self.m[j][i] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.m[i][..self.dim].to_vec()).collect()
    }

    pub fn symmetrized(mut self) -> Self {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let avg = 0.5 * (self.m[i][j] + self.m[j][i]);
                self.m[i][j] = avg;
                self.m[j][i] = avg;
            }
        }
        self
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        match self.dim {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    /// Inverse by the adjugate formula; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let m = &self.m;
        let mut inv = Self::zeros(self.dim);
        match self.dim {
            1 => inv.m[0][0] = 1.0 / m[0][0],
            2 => {
                inv.m[0][0] = m[1][1] / det;
                inv.m[1][1] = m[0][0] / det;
                inv.set(0, 1, -m[0][1] / det);
            }
            _ => {
                inv.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
                inv.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
                inv.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
                inv.set(0, 1, -(m[1][0] * m[2][2] - m[1][2] * m[2][0]) / det);
                inv.set(0, 2, (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det);
                inv.set(1, 2, -(m[0][0] * m[2][1] - m[0][1] * m[2][0]) / det);
            }
        }
        Some(inv)
    }

    /// Lower Cholesky factor `L` with `L Lᵀ = self`; `None` unless positive definite.
    pub fn cholesky(&self) -> Option<[[f64; 3]; 3]> {
        let n = self.dim;
        let mut l = [[0.0; 3]; 3];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.m[i][j];
                for k in 0..j {
                    sum -= l[i][k] * l[j][k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return None;
                    }
                    l[i][i] = sum.sqrt();
                } else {
                    l[i][j] = sum / l[j][j];
                }
            }
        }
        Some(l)
    }

    pub fn mul_vec(&self, v: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|j| self.m[i][j] * v[j]).sum();
        }
        out
    }

    /// `vᵀ M v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mv = self.mul_vec(v);
        (0..self.dim).map(|i| v[i] * mv[i]).sum()
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let d = self.m[i][j] - other.m[i][j];
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for row in self.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        self
    }

    pub fn add(mut self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += other.m[i][j];
            }
        }
        self
    }
}

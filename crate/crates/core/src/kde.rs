//! Gaussian kernel density estimation with exact first and second derivatives.
//!
//! The estimate is `f(x) = 1/(n h^d) Σ K((x - X_i)/h)` with `K` the standard
//! d-variate normal density. With `u = (x - X_i)/h` and `k = K(u)` each term
//! contributes
//!
//! * value: `k / (n h^d)`
//! * gradient: `-u k / (n h^(d+1))`
//! * Hessian: `(u uᵀ - I) k / (n h^(d+2))`

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::density::{Density, Derivatives};
use crate::error::{check_point, Error, Result};
use crate::linalg::SymMatrix;
use crate::sample::SampleMatrix;

/// Terms whose squared scaled distance exceeds this contribute below 1e-300.
pub const UNDERFLOW_CUTOFF: f64 = 1400.0;

/// Derivative order targeted by default when selecting a bandwidth.
pub const DEFAULT_TARGET_ORDER: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum BandwidthMode {
    Fixed,
    NormalScale { order: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub h: f64,
    #[serde(flatten)]
    pub mode: BandwidthMode,
}

impl Bandwidth {
    pub fn fixed(h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bandwidth must be positive and finite, got {h}"
            )));
        }
        Ok(Self {
            h,
            mode: BandwidthMode::Fixed,
        })
    }
}

/// Normal-scale rule for estimating derivatives of order `r`:
/// `h = sigma * (4 / ((d + 2r + 2) n))^(1 / (d + 2r + 4))`.
pub fn normal_scale_rule(sigma: f64, n: usize, dim: usize, r: u32) -> f64 {
    let d = dim as f64;
    let r = r as f64;
    sigma * (4.0 / ((d + 2.0 * r + 2.0) * n as f64)).powf(1.0 / (d + 2.0 * r + 4.0))
}

/// Normal-scale bandwidth with `sigma` the root mean of the per-coordinate
/// sample variances.
pub fn select_bandwidth_normal_scale(sample: &SampleMatrix, r: u32) -> Result<Bandwidth> {
    let var = sample.variances()?;
    if var.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate(
            "all coordinates have zero variance".into(),
        ));
    }
    let sigma = (var.iter().sum::<f64>() / var.len() as f64).sqrt();
    let h = normal_scale_rule(sigma, sample.len(), sample.dim(), r);
    Ok(Bandwidth {
        h,
        mode: BandwidthMode::NormalScale { order: r },
    })
}

/// Kernel density estimate with a scalar bandwidth and the Gaussian kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    sample: SampleMatrix,
    bandwidth: Bandwidth,
    norm: f64,
}

impl Kde {
    pub fn new(sample: SampleMatrix, bandwidth: Bandwidth) -> Result<Self> {
        let h = bandwidth.h;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bandwidth must be positive and finite, got {h}"
            )));
        }
        let d = sample.dim() as f64;
        let norm = 1.0 / ((2.0 * PI).powf(d / 2.0) * sample.len() as f64 * h.powf(d));
        Ok(Self {
            sample,
            bandwidth,
            norm,
        })
    }

    pub fn with_fixed_bandwidth(sample: SampleMatrix, h: f64) -> Result<Self> {
        Self::new(sample, Bandwidth::fixed(h)?)
    }

    pub fn sample(&self) -> &SampleMatrix {
        &self.sample
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    pub fn h(&self) -> f64 {
        self.bandwidth.h
    }

    /// Raw kernel moments `(Σk, Σk·u, Σk·u uᵀ)` at `x`.
    fn moments(&self, x: &[f64]) -> (f64, [f64; 3], [[f64; 3]; 3]) {
        let dim = self.sample.dim();
        let inv_h = 1.0 / self.bandwidth.h;
        let mut s0 = 0.0;
        let mut s1 = [0.0; 3];
        let mut s2 = [[0.0; 3]; 3];
        let mut u = [0.0; 3];
        for p in self.sample.points() {
            let mut q = 0.0;
            for k in 0..dim {
                u[k] = (x[k] - p[k]) * inv_h;
                q += u[k] * u[k];
            }
            if q > UNDERFLOW_CUTOFF {
                continue;
            }
            let w = (-0.5 * q).exp();
            s0 += w;
            for a in 0..dim {
                let wa = w * u[a];
                s1[a] += wa;
                for b in a..dim {
                    s2[a][b] += wa * u[b];
                }
            }
        }
        (s0, s1, s2)
    }

    fn value_unchecked(&self, x: &[f64]) -> f64 {
        let dim = self.sample.dim();
        let inv_h = 1.0 / self.bandwidth.h;
        let mut s0 = 0.0;
        for p in self.sample.points() {
            let mut q = 0.0;
            for k in 0..dim {
                let u = (x[k] - p[k]) * inv_h;
                q += u * u;
            }
            if q <= UNDERFLOW_CUTOFF {
                s0 += (-0.5 * q).exp();
            }
        }
        self.norm * s0
    }
}

impl Density for Kde {
    fn dim(&self) -> usize {
        self.sample.dim()
    }

    fn derivatives(&self, x: &[f64]) -> Result<Derivatives> {
        let dim = self.sample.dim();
        check_point(dim, x)?;
        let (s0, s1, s2) = self.moments(x);
        let h = self.bandwidth.h;
        let g_scale = -self.norm / h;
        let h_scale = self.norm / (h * h);
        let mut grad = [0.0; 3];
        for a in 0..dim {
            grad[a] = g_scale * s1[a];
        }
        let mut hess = [[0.0; 3]; 3];
        for a in 0..dim {
            for b in a..dim {
                let diag = if a == b { s0 } else { 0.0 };
                let v = h_scale * (s2[a][b] - diag);
                hess[a][b] = v;
                hess[b][a] = v;
            }
        }
        Ok(Derivatives::new(
            self.norm * s0,
            grad,
            SymMatrix::from_array(dim, hess),
        ))
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(self.sample.dim(), x)?;
        Ok(self.value_unchecked(x))
    }
}

//! Analytic Gaussian mixtures: exact derivatives, seeded sampling, and
//! Gaussian smoothing (the expectation of a Gaussian-kernel KDE).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curvature::ordered_eigenvalues;
use crate::density::{Density, Derivatives};
use crate::error::{check_point, Error, Result};
use crate::linalg::{SymMatrix, MAX_DIM};
use crate::sample::SampleMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureParams", into = "MixtureParams")]
pub struct GaussianMixture {
    dim: usize,
    components: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq)]
struct Component {
    weight: f64,
    mean: [f64; 3],
    cov: SymMatrix,
    precision: SymMatrix,
    chol: [[f64; 3]; 3],
    norm: f64,
}

/// Plain parameter form used for (de)serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<MixtureParams> for GaussianMixture {
    type Error = Error;

    fn try_from(p: MixtureParams) -> Result<Self> {
        let covs = p
            .covariances
            .iter()
            .map(|rows| SymMatrix::from_rows(rows))
            .collect::<Result<Vec<_>>>()?;
        GaussianMixture::new(p.weights, p.means, covs)
    }
}

impl From<GaussianMixture> for MixtureParams {
    fn from(g: GaussianMixture) -> Self {
        MixtureParams {
            weights: g.weights(),
            means: g.components.iter().map(|c| c.mean[..g.dim].to_vec()).collect(),
            covariances: g.components.iter().map(|c| c.cov.rows()).collect(),
        }
    }
}

impl GaussianMixture {
    /// Validates weights (nonnegative, summing to 1 within 1e-12) and that
    /// every covariance is symmetric positive definite.
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<SymMatrix>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || covariances.len() != k {
            return Err(Error::Model(format!(
                "need matching nonempty weights/means/covariances, got {}/{}/{}",
                k,
                means.len(),
                covariances.len()
            )));
        }
        let dim = means[0].len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Model(format!("dimension {dim} not in 1..=3")));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Model("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Model(format!("weights sum to {total}, not 1")));
        }
        let mut components = Vec::with_capacity(k);
        for ((weight, mu), cov) in weights.into_iter().zip(means).zip(covariances) {
            if mu.len() != dim || cov.dim() != dim {
                return Err(Error::Model("inconsistent component dimensions".into()));
            }
            check_point(dim, &mu).map_err(|e| Error::Model(format!("bad mean: {e}")))?;
            if ordered_eigenvalues(&cov).smallest() <= 0.0 {
                return Err(Error::Model("covariance is not positive definite".into()));
            }
            let precision = cov
                .inverse()
                .ok_or_else(|| Error::Model("covariance is not invertible".into()))?;
            let chol = cov
                .cholesky()
                .ok_or_else(|| Error::Model("covariance is not positive definite".into()))?;
            let norm = 1.0 / ((2.0 * PI).powf(dim as f64 / 2.0) * cov.determinant().sqrt());
            let mut mean = [0.0; 3];
            mean[..dim].copy_from_slice(&mu);
            components.push(Component {
                weight,
                mean,
                cov,
                precision,
                chol,
                norm,
            });
        }
        Ok(Self { dim, components })
    }

    pub fn standard_normal(dim: usize) -> Result<Self> {
        Self::new(vec![1.0], vec![vec![0.0; dim]], vec![SymMatrix::identity(dim)])
    }

    /// Two equally weighted bivariate components at `(∓3/2, 0)` with
    /// correlations `-0.7` and `+0.7`.
    pub fn boomerang() -> Self {
        let c1 = SymMatrix::from_rows(&[vec![1.0, -0.7], vec![-0.7, 1.0]]).expect("symmetric");
        let c2 = SymMatrix::from_rows(&[vec![1.0, 0.7], vec![0.7, 1.0]]).expect("symmetric");
        Self::new(
            vec![0.5, 0.5],
            vec![vec![-1.5, 0.0], vec![1.5, 0.0]],
            vec![c1, c2],
        )
        .expect("valid mixture")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.components[k].mean[..self.dim]
    }

    pub fn covariance(&self, k: usize) -> &SymMatrix {
        &self.components[k].cov
    }

    /// Convolution with the `N(0, h² I)` kernel: covariances become `Σ + h² I`.
    pub fn smoothed(&self, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!(
                "smoothing bandwidth must be positive, got {h}"
            )));
        }
        let inflate = SymMatrix::identity(self.dim).scaled(h * h);
        Self::new(
            self.weights(),
            (0..self.len()).map(|k| self.mean(k).to_vec()).collect(),
            self.components.iter().map(|c| c.cov.add(&inflate)).collect(),
        )
    }

    /// `n` draws: component by inverse CDF on the weights, then
    /// `mean + L z` with `L` the Cholesky factor and `z` Box–Muller normals.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleMatrix> {
        if n == 0 {
            return Err(Error::InvalidInput("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normals = BoxMuller::default();
        let mut cumulative = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for c in &self.components {
            acc += c.weight;
            cumulative.push(acc);
        }
        let last_positive = self
            .components
            .iter()
            .rposition(|c| c.weight > 0.0)
            .expect("weights sum to one");
        let dim = self.dim;
        let mut data = Vec::with_capacity(n * dim);
        for _ in 0..n {
            let u: f64 = rng.random();
            let k = cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(last_positive);
            let comp = &self.components[k];
            let mut z = [0.0; 3];
            for zi in z.iter_mut().take(dim) {
                *zi = normals.next(&mut rng);
            }
            for i in 0..dim {
                let mut v = comp.mean[i];
                for j in 0..=i {
                    v += comp.chol[i][j] * z[j];
                }
                data.push(v);
            }
        }
        SampleMatrix::new(dim, data)
    }
}

/// Box–Muller standard normals, caching the second draw of each pair.
#[derive(Debug, Default)]
pub(crate) struct BoxMuller {
    spare: Option<f64>,
}

impl BoxMuller {
    pub(crate) fn next<R: Rng>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - U lies in (0, 1], keeping the logarithm finite.
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

impl Density for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn derivatives(&self, x: &[f64]) -> Result<Derivatives> {
        let dim = self.dim;
        check_point(dim, x)?;
        let mut value = 0.0;
        let mut grad = [0.0; 3];
        let mut hess = SymMatrix::zeros(dim);
        for c in &self.components {
            let mut diff = [0.0; 3];
            for i in 0..dim {
                diff[i] = x[i] - c.mean[i];
            }
            let pd = c.precision.mul_vec(&diff);
            let q: f64 = (0..dim).map(|i| diff[i] * pd[i]).sum();
            let wn = c.weight * c.norm * (-0.5 * q).exp();
            value += wn;
            for i in 0..dim {
                grad[i] -= wn * pd[i];
                for j in i..dim {
                    let v = hess.get(i, j) + wn * (pd[i] * pd[j] - c.precision.get(i, j));
                    hess.set(i, j, v);
                }
            }
        }
        Ok(Derivatives::new(value, grad, hess))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_mode_derivatives() {
        for d in 1..=3 {
            let g = GaussianMixture::standard_normal(d).unwrap();
            let x = vec![0.0; d];
            let der = g.derivatives(&x).unwrap();
            let peak = (2.0 * PI).powf(-(d as f64) / 2.0);
            assert!((der.value - peak).abs() < 1e-15);
            assert!(der.gradient().iter().all(|&v| v == 0.0));
            for i in 0..d {
                for j in 0..d {
                    let expected = if i == j { -peak } else { 0.0 };
                    assert!((der.hessian.get(i, j) - expected).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn construction_errors() {
        let id = SymMatrix::identity(2);
        assert!(GaussianMixture::new(vec![0.5, 0.6], vec![vec![0.0; 2]; 2], vec![id; 2]).is_err());
        let singular = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            GaussianMixture::new(vec![1.0], vec![vec![0.0, 0.0]], vec![singular]),
            Err(Error::Model(_))
        ));
        let indefinite = SymMatrix::diagonal(&[1.0, -1.0]);
        assert!(GaussianMixture::new(vec![1.0], vec![vec![0.0, 0.0]], vec![indefinite]).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = GaussianMixture::boomerang();
        assert_eq!(g.sample(50, 7).unwrap(), g.sample(50, 7).unwrap());
        assert_ne!(g.sample(50, 7).unwrap(), g.sample(50, 8).unwrap());
    }

    #[test]
    fn zero_weight_component_never_drawn() {
        let g = GaussianMixture::new(
            vec![1.0, 0.0],
            vec![vec![-100.0], vec![100.0]],
            vec![SymMatrix::identity(1); 2],
        )
        .unwrap();
        let s = g.sample(2000, 3).unwrap();
        assert!(s.points().all(|p| p[0] < 0.0));
    }

    #[test]
    fn smoothing_inflates_covariance() {
        let g = GaussianMixture::standard_normal(2).unwrap().smoothed(1.0).unwrap();
        assert_eq!(g.covariance(0), &SymMatrix::identity(2).scaled(2.0));
        let tiny = GaussianMixture::boomerang().smoothed(1e-9).unwrap();
        assert!(tiny
            .covariance(1)
            .frobenius_distance(GaussianMixture::boomerang().covariance(1))
            < 1e-15);
        assert!(GaussianMixture::boomerang().smoothed(0.0).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let g = GaussianMixture::boomerang();
        let json = serde_json::to_string(&g).unwrap();
        let back: GaussianMixture = serde_json::from_str(&json).unwrap();
        assert_eq!(g, back);
    }
}

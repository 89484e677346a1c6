//! Helpers shared by the integration suites: random models and independent
//! numerical oracles.
#![allow(dead_code)]

use curvebump::{Density, GaussianMixture, SampleMatrix, SymMatrix};
use rand::Rng;

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Symmetric matrix with entries uniform in `[-scale, scale]`.
pub fn random_symmetric(rng: &mut impl Rng, dim: usize, scale: f64) -> SymMatrix {
    let mut m = SymMatrix::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            m.set(i, j, uniform(rng, -scale, scale));
        }
    }
    m
}

/// `A Aᵀ + floor · I`.
pub fn random_spd(rng: &mut impl Rng, dim: usize, floor: f64) -> SymMatrix {
    let a: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| uniform(rng, -1.0, 1.0)).collect())
        .collect();
    let mut m = SymMatrix::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            let v: f64 = (0..dim).map(|k| a[i][k] * a[j][k]).sum();
            m.set(i, j, v + if i == j { floor } else { 0.0 });
        }
    }
    m
}

/// One to three components with means in `[-2, 2]^d`.
pub fn random_mixture(rng: &mut impl Rng, dim: usize) -> GaussianMixture {
    let k = rng.random_range(1..=3);
    let raw: Vec<f64> = (0..k).map(|_| uniform(rng, 0.2, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[..k - 1].iter().sum();
    weights[k - 1] = 1.0 - head;
    let means = (0..k)
        .map(|_| (0..dim).map(|_| uniform(rng, -2.0, 2.0)).collect())
        .collect();
    let covs = (0..k).map(|_| random_spd(rng, dim, 0.2)).collect();
    GaussianMixture::new(weights, means, covs).unwrap()
}

pub fn random_sample(rng: &mut impl Rng, dim: usize, n: usize) -> SampleMatrix {
    let data = (0..n * dim).map(|_| uniform(rng, -2.0, 2.0)).collect();
    SampleMatrix::new(dim, data).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Normwise relative error of `got` against `want`.
pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let diff: Vec<f64> = got.iter().zip(want).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(want).max(f64::MIN_POSITIVE)
}

/// Central differences: gradient from values, Hessian from gradients.
pub fn finite_differences(model: &dyn Density, x: &[f64], step: f64) -> (Vec<f64>, Vec<f64>) {
    let d = x.len();
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    for i in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += step;
        xm[i] -= step;
        grad[i] = (model.value(&xp).unwrap() - model.value(&xm).unwrap()) / (2.0 * step);
        let gp = model.gradient(&xp).unwrap();
        let gm = model.gradient(&xm).unwrap();
        for j in 0..d {
            hess[i * d + j] = (gp[j] - gm[j]) / (2.0 * step);
        }
    }
    (grad, hess)
}

pub fn flat_hessian(m: &SymMatrix) -> Vec<f64> {
    m.rows().concat()
}

/// `det(A - λI)` by cofactor expansion.
pub fn char_poly(a: &SymMatrix, lambda: f64) -> f64 {
    let g = |i, j| a.get(i, j) - if i == j { lambda } else { 0.0 };
    match a.dim() {
        1 => g(0, 0),
        2 => g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0),
        _ => {
            g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
                - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
        }
    }
}

/// Number of eigenvalues strictly below `sigma`: negative pivots of the
/// `LDLᵀ` factorization of `A - σI` (Sylvester's law of inertia).
fn count_below(a: &SymMatrix, sigma: f64) -> usize {
    let d = a.dim();
    let mut m: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| a.get(i, j) - if i == j { sigma } else { 0.0 }).collect())
        .collect();
    let mut negatives = 0;
    for k in 0..d {
        let mut p = m[k][k];
        if p == 0.0 {
            p = -f64::MIN_POSITIVE;
        }
        if p < 0.0 {
            negatives += 1;
        }
        for i in k + 1..d {
            let l = m[i][k] / p;
            for j in k + 1..d {
                m[i][j] -= l * m[k][j];
            }
        }
    }
    negatives
}

/// Eigenvalues in descending order by bisection on the inertia count, each
/// refined to a sign change of the characteristic polynomial.
pub fn bisection_eigenvalues(a: &SymMatrix) -> Vec<f64> {
    let d = a.dim();
    let radius = (0..d)
        .map(|i| a.get(i, i).abs() + (0..d).filter(|&j| j != i).map(|j| a.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        // k-th smallest eigenvalue: smallest σ with count_below(σ) > k.
        let (mut lo, mut hi) = (-radius, radius);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(a, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        debug_assert!(char_poly(a, root).abs() < 1e-6 * radius.powi(d as i32));
        out.push(root);
    }
    out.reverse();
    out
}

//! Curvature functionals of a density and the ordered Hessian eigenvalues
//! they are built from.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{Density, Derivatives};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// The curvature functional defining a bump family. The bump is the closed set
/// `{x : (-1)^s φ(f)(x) >= 0}` with `s` given by [`Functional::sign_selector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    /// Largest Hessian eigenvalue; concave bumps.
    ConcaveLambda1,
    /// Smallest Hessian eigenvalue; convex dips.
    ConvexLambdaD,
    Laplacian,
    MeanCurvature,
    HessianDeterminant,
    GaussianCurvature,
}

impl Functional {
    pub const ALL: [Functional; 6] = [
        Functional::ConcaveLambda1,
        Functional::ConvexLambdaD,
        Functional::Laplacian,
        Functional::MeanCurvature,
        Functional::HessianDeterminant,
        Functional::GaussianCurvature,
    ];

    pub fn sign_selector(self) -> u8 {
        match self {
            Functional::ConcaveLambda1 | Functional::Laplacian | Functional::MeanCurvature => 1,
            Functional::ConvexLambdaD
            | Functional::HessianDeterminant
            | Functional::GaussianCurvature => 0,
        }
    }

    /// `(-1)^s`.
    pub fn sign(self) -> f64 {
        if self.sign_selector() == 1 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Functional::ConcaveLambda1 => "concave-lambda1",
            Functional::ConvexLambdaD => "convex-lambdad",
            Functional::Laplacian => "laplacian",
            Functional::MeanCurvature => "mean-curvature",
            Functional::HessianDeterminant => "hessian-determinant",
            Functional::GaussianCurvature => "gaussian-curvature",
        }
    }

    /// Determinant-type bumps only carry bump semantics in the plane.
    pub fn check_bump_dimension(self, dim: usize) -> Result<()> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension {dim} not in 1..=3")));
        }
        match self {
            Functional::HessianDeterminant | Functional::GaussianCurvature if dim != 2 => {
                Err(Error::Config(format!(
                    "{} bumps are defined for d = 2 only (got d = {dim})",
                    self.name()
                )))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let f = match s.to_ascii_lowercase().as_str() {
            "concave" | "concave-lambda1" | "lambda1" => Functional::ConcaveLambda1,
            "convex" | "convex-lambdad" | "lambdad" => Functional::ConvexLambdaD,
            "laplacian" | "trace" => Functional::Laplacian,
            "mean-curvature" | "mean" => Functional::MeanCurvature,
            "hessian-determinant" | "determinant" | "det" => Functional::HessianDeterminant,
            "gaussian-curvature" | "gaussian" => Functional::GaussianCurvature,
            other => {
                return Err(Error::Config(format!("unknown functional `{other}`")));
            }
        };
        Ok(f)
    }
}

/// Hessian eigenvalues sorted so that `λ1 >= λ2 >= ... >= λd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedEigenvalues {
    dim: usize,
    values: [f64; 3],
}

impl OrderedEigenvalues {
    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    pub fn smallest(&self) -> f64 {
        self.values[self.dim - 1]
    }

    /// Smallest gap between consecutive eigenvalues (`+∞` when `d = 1`).
    pub fn min_gap(&self) -> f64 {
        self.as_slice()
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Closed-form eigenvalues of a symmetric matrix with `d <= 3`.
pub fn ordered_eigenvalues(m: &SymMatrix) -> OrderedEigenvalues {
    let dim = m.dim();
    let mut values = [0.0; 3];
    match dim {
        1 => values[0] = m.get(0, 0),
        2 => {
            let (a, b, c) = (m.get(0, 0), m.get(0, 1), m.get(1, 1));
            let mid = 0.5 * (a + c);
            let radius = (0.5 * (a - c)).hypot(b);
            values[0] = mid + radius;
            values[1] = mid - radius;
        }
        _ => values = eigenvalues_3x3(m),
    }
    OrderedEigenvalues { dim, values }
}

/// Validating entry point for raw matrices: rejects asymmetry beyond `1e-9`.
pub fn ordered_eigenvalues_of(rows: &[Vec<f64>]) -> Result<OrderedEigenvalues> {
    Ok(ordered_eigenvalues(&SymMatrix::from_rows(rows)?))
}

// Trigonometric solution of the depressed characteristic cubic.
fn eigenvalues_3x3(m: &SymMatrix) -> [f64; 3] {
    let off = m.get(0, 1).powi(2) + m.get(0, 2).powi(2) + m.get(1, 2).powi(2);
    let mut diag = [m.get(0, 0), m.get(1, 1), m.get(2, 2)];
    if off == 0.0 {
        diag.sort_by(|a, b| b.total_cmp(a));
        return diag;
    }
    let q = (diag[0] + diag[1] + diag[2]) / 3.0;
    let p2 = (diag[0] - q).powi(2) + (diag[1] - q).powi(2) + (diag[2] - q).powi(2) + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    let shifted = SymMatrix::from_array(
        3,
        [
            [(diag[0] - q) / p, m.get(0, 1) / p, m.get(0, 2) / p],
            [m.get(1, 0) / p, (diag[1] - q) / p, m.get(1, 2) / p],
            [m.get(2, 0) / p, m.get(2, 1) / p, (diag[2] - q) / p],
        ],
    );
    let r = (0.5 * shifted.determinant()).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let l2 = 3.0 * q - l1 - l3;
    let mut out = [l1, l2, l3];
    // Rounding can swap nearly equal roots.
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// `φ(f)(x)` from precomputed derivatives (no sign folding).
pub fn functional_from_derivatives(der: &Derivatives, functional: Functional) -> f64 {
    let h = &der.hessian;
    match functional {
        Functional::ConcaveLambda1 => ordered_eigenvalues(h).largest(),
        Functional::ConvexLambdaD => ordered_eigenvalues(h).smallest(),
        Functional::Laplacian => h.trace(),
        Functional::MeanCurvature => {
            // div(∇f / sqrt(1 + |∇f|²)) expanded.
            let g = der.gradient();
            let w = 1.0 + der.gradient_norm_sq();
            (w * h.trace() - h.quadratic_form(g)) / w.powf(1.5)
        }
        Functional::HessianDeterminant => h.determinant(),
        Functional::GaussianCurvature => {
            let w = 1.0 + der.gradient_norm_sq();
            h.determinant() / w.powf(1.0 + der.dim() as f64 / 2.0)
        }
    }
}

pub fn eval_functional<D: Density + ?Sized>(
    model: &D,
    functional: Functional,
    x: &[f64],
) -> Result<f64> {
    let dim = model.dim();
    if !(1..=3).contains(&dim) {
        return Err(Error::Config(format!(
            "{} is not defined for d = {dim}",
            functional.name()
        )));
    }
    let der = model.derivatives(x)?;
    Ok(functional_from_derivatives(&der, functional))
}

/// Minimum over `points` of the smallest consecutive eigenvalue gap of the
/// Hessian. Values near zero flag eigenvalue crossings, where eigenvalue-bump
/// boundaries may be unstable. Returns `+∞` for an empty point set.
pub fn eigenvalue_separation<D, I, P>(model: &D, points: I) -> Result<f64>
where
    D: Density + ?Sized,
    I: IntoIterator<Item = P>,
    P: AsRef<[f64]>,
{
    if model.dim() < 2 {
        return Err(Error::Config(
            "eigenvalue separation needs d >= 2".into(),
        ));
    }
    let mut best = f64::INFINITY;
    for p in points {
        let h = model.hessian(p.as_ref())?;
        best = best.min(ordered_eigenvalues(&h).min_gap());
    }
    Ok(best)
}

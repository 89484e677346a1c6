use crate::error::Result;
use crate::linalg::SymMatrix;

/// Value, gradient and Hessian of a density at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    grad: [f64; 3],
    pub hessian: SymMatrix,
}

impl Derivatives {
    pub(crate) fn new(value: f64, grad: [f64; 3], hessian: SymMatrix) -> Self {
        Self {
            value,
            grad,
            hessian,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.hessian.dim()
    }

    #[inline]
    pub fn gradient(&self) -> &[f64] {
        &self.grad[..self.dim()]
    }

    pub fn gradient_norm_sq(&self) -> f64 {
        self.gradient().iter().map(|g| g * g).sum()
    }
}

/// A density on `R^d` (`d <= 3`) with value, gradient and Hessian evaluation.
///
/// Implementations are immutable and evaluation is pure, so models are shared
/// freely across threads.
pub trait Density: Sync {
    fn dim(&self) -> usize;

    fn derivatives(&self, x: &[f64]) -> Result<Derivatives>;

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.derivatives(x)?.value)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.derivatives(x)?.gradient().to_vec())
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        Ok(self.derivatives(x)?.hessian)
    }
}

impl<D: Density + ?Sized> Density for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn derivatives(&self, x: &[f64]) -> Result<Derivatives> {
        (**self).derivatives(x)
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
}

//! Bootstrap confidence regions for curvature bumps.
//!
//! The estimated bump `{φ̂ >= 0}` (sign-folded) is sandwiched between
//! `lower = {φ̂ >= ζ}` and `upper = {φ̂ >= -ζ}`. The margin `ζ` comes from
//! bootstrap suprema of second-order derivative errors:
//!
//! * Laplacian bumps: the `(1 - α)` quantile of the Laplacian errors.
//! * eigenvalue bumps: `Σ_i Σ_j TVaR_{1-α}` of the `D_ij` errors.
//! * Gaussian (determinant) bumps, `d = 2`: the same sum scaled by a constant
//!   `C > 1/(π h⁴)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::Functional;
use crate::density::{Density, Derivatives};
use crate::error::{Error, Result};
use crate::kde::{Bandwidth, Kde};
use crate::levelset::{
    extract_zero_level, BoundaryGeometry, GridSpec, OffsetField, ScalarField, ScalarFieldGrid,
};
use crate::sample::SampleMatrix;

/// Upper bound on `replicates × nodes × resample size` kernel evaluations.
pub const MAX_BOOTSTRAP_WORK: f64 = 2e11;

/// Below this many replicates results are flagged as unreliable.
pub const LOW_REPLICATE_THRESHOLD: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapPlan {
    pub replicates: usize,
    /// Defaults to the sample size.
    pub resample_size: Option<usize>,
    pub alpha: f64,
    pub seed: u64,
}

impl BootstrapPlan {
    pub fn new(replicates: usize, alpha: f64, seed: u64) -> Result<Self> {
        let plan = Self {
            replicates,
            resample_size: None,
            alpha,
            seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_resample_size(mut self, m: usize) -> Result<Self> {
        self.resample_size = Some(m);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 bootstrap replicates, got {}",
                self.replicates
            )));
        }
        check_alpha(self.alpha)?;
        if self.resample_size == Some(0) {
            return Err(Error::InvalidInput("resample size must be positive".into()));
        }
        Ok(())
    }

    pub fn is_low_replicate(&self) -> bool {
        self.replicates < LOW_REPLICATE_THRESHOLD
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Resample indices of replicate `b`: `m` uniform draws from `0..n`, a pure
/// function of `(seed, b)`.
pub fn replicate_indices(seed: u64, b: usize, n: usize, m: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    (0..m).map(|_| rng.random_range(0..n)).collect()
}

/// A linear second-order differential operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operator {
    Laplacian,
    /// `∂²/∂x_i∂x_j` with zero-based `i <= j`.
    Partial(usize, usize),
}

impl Operator {
    pub fn partial(i: usize, j: usize) -> Self {
        Operator::Partial(i.min(j), i.max(j))
    }

    pub fn apply(self, der: &Derivatives) -> f64 {
        match self {
            Operator::Laplacian => der.hessian.trace(),
            Operator::Partial(i, j) => der.hessian.get(i, j),
        }
    }

    /// `laplacian` or one-based `D12`-style tags.
    pub fn tag(self) -> String {
        match self {
            Operator::Laplacian => "laplacian".into(),
            Operator::Partial(i, j) => format!("D{}{}", i + 1, j + 1),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// All `D_ij` with `i <= j`.
pub fn second_order_partials(dim: usize) -> Vec<Operator> {
    (0..dim)
        .flat_map(|i| (i..dim).map(move |j| Operator::Partial(i, j)))
        .collect()
}

/// Bootstrap sup-norm errors of one operator, in replicate order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupErrorSample {
    pub operator: Operator,
    pub errors: Vec<f64>,
}

pub type SupErrors = BTreeMap<Operator, SupErrorSample>;

/// For each replicate, resamples the data with replacement, refits the KDE
/// at the same bandwidth, and records `sup_grid |D f* - D f̂|` for every
/// operator. Operators share each replicate's draw.
pub fn bootstrap_sup_errors(
    sample: &SampleMatrix,
    bandwidth: Bandwidth,
    grid: &GridSpec,
    plan: &BootstrapPlan,
    operators: &[Operator],
) -> Result<SupErrors> {
    plan.validate()?;
    let dim = sample.dim();
    if grid.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: grid.dim(),
        });
    }
    if operators.is_empty() {
        return Err(Error::Config("no operators requested".into()));
    }
    if let Some(op) = operators.iter().find(|op| match op {
        Operator::Partial(i, j) => *i >= dim || *j >= dim,
        Operator::Laplacian => false,
    }) {
        return Err(Error::Config(format!("operator {op} out of range for d = {dim}")));
    }
    let n = sample.len();
    let m = plan.resample_size.unwrap_or(n);
    let work = plan.replicates as f64 * grid.len() as f64 * m as f64;
    if work > MAX_BOOTSTRAP_WORK {
        return Err(Error::Resource(format!(
            "bootstrap needs ~{work:.2e} kernel evaluations (limit {MAX_BOOTSTRAP_WORK:.0e}); \
             coarsen the grid or reduce the number of replicates"
        )));
    }

    let base = Kde::new(sample.clone(), bandwidth)?;
    let reference = operator_values(&base, grid, operators)?;

    let per_replicate: Vec<Result<Vec<f64>>> = (0..plan.replicates)
        .into_par_iter()
        .map(|b| {
            let indices = replicate_indices(plan.seed, b, n, m);
            let boot = Kde::new(sample.select(&indices), bandwidth)?;
            let values = operator_values(&boot, grid, operators)?;
            Ok(values
                .iter()
                .zip(&reference)
                .map(|(v, r)| {
                    v.iter()
                        .zip(r)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .collect())
        })
        .collect();

    let mut out: SupErrors = operators
        .iter()
        .map(|&op| {
            (
                op,
                SupErrorSample {
                    operator: op,
                    errors: Vec::with_capacity(plan.replicates),
                },
            )
        })
        .collect();
    for sups in per_replicate {
        for (op, s) in operators.iter().zip(sups?) {
            out.get_mut(op).expect("initialized").errors.push(s);
        }
    }
    Ok(out)
}

/// `values[op][node]`.
fn operator_values(model: &Kde, grid: &GridSpec, operators: &[Operator]) -> Result<Vec<Vec<f64>>> {
    let dim = grid.dim();
    let per_node: Vec<Result<Vec<f64>>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let der = model.derivatives(&grid.node(k)[..dim])?;
            Ok(operators.iter().map(|op| op.apply(&der)).collect())
        })
        .collect();
    let mut out = vec![Vec::with_capacity(grid.len()); operators.len()];
    for (node, row) in per_node.into_iter().enumerate() {
        let row = row.map_err(|e| Error::AtNode { node, source: Box::new(e) })?;
        for (o, v) in out.iter_mut().zip(row) {
            o.push(v);
        }
    }
    Ok(out)
}

fn check_level(errors: &[f64], p: f64) -> Result<()> {
    if errors.is_empty() {
        return Err(Error::InvalidInput("empty error sample".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!("level must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// Rank `⌈p B⌉` (one-based) of the sorted sample: the left-continuous
/// empirical quantile.
pub fn empirical_quantile(errors: &[f64], p: f64) -> Result<f64> {
    check_level(errors, p)?;
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[quantile_rank(sorted.len(), p) - 1])
}

fn quantile_rank(len: usize, p: f64) -> usize {
    let pos = p * len as f64;
    // Products like 0.9 * 100 can land a few ulps above an integer.
    let snapped = if (pos - pos.round()).abs() <= 4.0 * f64::EPSILON * pos {
        pos.round()
    } else {
        pos.ceil()
    };
    (snapped as usize).clamp(1, len)
}

/// Tail value-at-risk of the empirical law:
/// `q + E[(X - q)+] / (1 - p)` with `q` the empirical `p`-quantile.
pub fn empirical_tvar(errors: &[f64], p: f64) -> Result<f64> {
    let q = empirical_quantile(errors, p)?;
    let excess: f64 = errors.iter().map(|&e| (e - q).max(0.0)).sum();
    // `B - pB` rather than `(1 - p) B`: `1 - p` is inexact for most decimal p.
    let b = errors.len() as f64;
    Ok(q + excess / (b - p * b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MarginMethod {
    Quantile,
    TvarSum,
    TvarSumScaled { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceMargin {
    pub zeta: f64,
    #[serde(flatten)]
    pub method: MarginMethod,
    pub alpha: f64,
    pub replicates: usize,
}

impl ConfidenceMargin {
    /// A margin fixed by hand (test hooks, sensitivity sweeps).
    pub fn fixed(zeta: f64, alpha: f64) -> Self {
        Self {
            zeta,
            method: MarginMethod::Quantile,
            alpha,
            replicates: 0,
        }
    }
}

pub fn margin_laplacian(errs: &SupErrorSample, alpha: f64) -> Result<ConfidenceMargin> {
    check_alpha(alpha)?;
    Ok(ConfidenceMargin {
        zeta: empirical_quantile(&errs.errors, 1.0 - alpha)?,
        method: MarginMethod::Quantile,
        alpha,
        replicates: errs.errors.len(),
    })
}

fn tvar_double_sum(errs: &SupErrors, dim: usize, alpha: f64) -> Result<(f64, usize)> {
    check_alpha(alpha)?;
    let mut total = 0.0;
    let mut replicates = 0;
    for i in 0..dim {
        for j in 0..dim {
            let op = Operator::partial(i, j);
            let s = errs
                .get(&op)
                .ok_or_else(|| Error::Config(format!("missing bootstrap errors for {op}")))?;
            total += empirical_tvar(&s.errors, 1.0 - alpha)?;
            replicates = s.errors.len();
        }
    }
    Ok((total, replicates))
}

/// `Σ_{i,j} TVaR_{1-α}(D_ij)`, off-diagonal operators counted twice.
pub fn margin_eigenvalue(errs: &SupErrors, dim: usize, alpha: f64) -> Result<ConfidenceMargin> {
    let (zeta, replicates) = tvar_double_sum(errs, dim, alpha)?;
    Ok(ConfidenceMargin {
        zeta,
        method: MarginMethod::TvarSum,
        alpha,
        replicates,
    })
}

/// Smallest admissible scale constant is strictly above `1 / (π h⁴)`.
pub fn gaussian_margin_lower_bound(h: f64) -> f64 {
    1.0 / (PI * h.powi(4))
}

/// Default scale constant `1.05 / (π h⁴)`.
pub fn default_gaussian_constant(h: f64) -> f64 {
    1.05 * gaussian_margin_lower_bound(h)
}

/// `C Σ_{i,j=1,2} TVaR_{1-α}(D_ij)` for planar determinant bumps.
pub fn margin_gaussian(errs: &SupErrors, alpha: f64, h: f64, c: f64) -> Result<ConfidenceMargin> {
    let bound = gaussian_margin_lower_bound(h);
    if c.is_nan() || c <= bound {
        return Err(Error::Constraint(format!(
            "Gaussian-bump margin constant must exceed 1/(π h⁴) = {bound} for h = {h}; got C = {c}"
        )));
    }
    let (sum, replicates) = tvar_double_sum(errs, 2, alpha)?;
    Ok(ConfidenceMargin {
        zeta: c * sum,
        method: MarginMethod::TvarSumScaled { c },
        alpha,
        replicates,
    })
}

/// Operators whose bootstrap errors the margin for `functional` needs.
pub fn required_operators(functional: Functional, dim: usize) -> Result<Vec<Operator>> {
    match functional {
        Functional::Laplacian => Ok(vec![Operator::Laplacian]),
        Functional::ConcaveLambda1 | Functional::ConvexLambdaD => Ok(second_order_partials(dim)),
        Functional::HessianDeterminant if dim == 2 => Ok(second_order_partials(2)),
        Functional::HessianDeterminant => Err(Error::Config(format!(
            "hessian-determinant inference needs d = 2 (got d = {dim})"
        ))),
        Functional::MeanCurvature | Functional::GaussianCurvature => Err(Error::Config(format!(
            "inference unsupported for this functional ({functional})"
        ))),
    }
}

/// Margin matching `functional`; `gaussian_constant` defaults to
/// [`default_gaussian_constant`].
pub fn margin_for(
    functional: Functional,
    errs: &SupErrors,
    dim: usize,
    alpha: f64,
    h: f64,
    gaussian_constant: Option<f64>,
) -> Result<ConfidenceMargin> {
    required_operators(functional, dim)?;
    match functional {
        Functional::Laplacian => {
            let s = errs
                .get(&Operator::Laplacian)
                .ok_or_else(|| Error::Config("missing Laplacian bootstrap errors".into()))?;
            margin_laplacian(s, alpha)
        }
        Functional::HessianDeterminant => margin_gaussian(
            errs,
            alpha,
            h,
            gaussian_constant.unwrap_or_else(|| default_gaussian_constant(h)),
        ),
        _ => margin_eigenvalue(errs, dim, alpha),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegionPair {
    pub zeta: f64,
    pub estimate_mask: Vec<bool>,
    /// `{φ̂ >= -ζ}`.
    pub upper_mask: Vec<bool>,
    /// `{φ̂ >= ζ}`.
    pub lower_mask: Vec<bool>,
    pub upper_boundary: BoundaryGeometry,
    pub lower_boundary: BoundaryGeometry,
}

impl ConfidenceRegionPair {
    /// `lower ⊆ estimate ⊆ upper` node-wise.
    pub fn is_nested(&self) -> bool {
        self.lower_mask
            .iter()
            .zip(&self.estimate_mask)
            .zip(&self.upper_mask)
            .all(|((&lo, &est), &up)| (!lo || est) && (!est || up))
    }

    /// `lower ⊆ mask ⊆ upper` for an arbitrary node mask.
    pub fn sandwiches(&self, mask: &[bool]) -> bool {
        self.lower_mask
            .iter()
            .zip(mask)
            .zip(&self.upper_mask)
            .all(|((&lo, &m), &up)| (!lo || m) && (!m || up))
    }
}

/// Upper and lower confidence sets for a sign-folded field. `source` is the
/// continuous field, used by the boundary extractors when available.
pub fn confidence_regions(
    field: &ScalarFieldGrid,
    margin: &ConfidenceMargin,
    source: Option<&dyn ScalarField>,
) -> Result<ConfidenceRegionPair> {
    let zeta = margin.zeta;
    if zeta.is_nan() || zeta < 0.0 {
        return Err(Error::InvalidInput(format!("margin must be nonnegative, got {zeta}")));
    }
    let estimate_mask = field.mask_at_least(0.0);
    let upper_mask = field.mask_at_least(-zeta);
    let lower_mask = field.mask_at_least(zeta);
    let boundary = |offset: f64| -> Result<BoundaryGeometry> {
        if !offset.is_finite() {
            return Ok(BoundaryGeometry::empty(field.dim()));
        }
        let shifted = field.shifted(offset);
        match source {
            Some(src) => {
                let off = OffsetField::new(src, offset);
                extract_zero_level(&shifted, Some(&off))
            }
            None => extract_zero_level(&shifted, None),
        }
    };
    Ok(ConfidenceRegionPair {
        zeta,
        upper_boundary: boundary(zeta)?,
        lower_boundary: boundary(-zeta)?,
        estimate_mask,
        upper_mask,
        lower_mask,
    })
}

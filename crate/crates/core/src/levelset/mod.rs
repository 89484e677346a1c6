//! Grids over a rectangular domain, sampled scalar fields, and extraction of
//! their zero level sets.
//!
//! Fields are sign-folded so that the region of interest is always `{v >= 0}`.
//! Nodes with value exactly zero count as inside.

mod components;
mod cubes;
mod hausdorff;
mod squares;
mod tables;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{functional_from_derivatives, Functional};
use crate::density::Density;
use crate::error::{check_point, Error, Result};
use crate::linalg::MAX_DIM;
use crate::sample::SampleMatrix;

pub use components::{connected_components, Components};
pub use cubes::{euler_characteristic, extract_zero_level_3d};
pub use hausdorff::{directed_hausdorff, hausdorff_distance};
pub use squares::extract_zero_level_2d;

/// A rectangular lattice with `resolution[k]` nodes along axis `k`.
///
/// Node `k` is numbered row-major with the first coordinate varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
    resolution: Vec<usize>,
}

impl GridSpec {
    pub const MAX_NODES: usize = 100_000_000;

    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let dim = lower.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidInput(format!("grid dimension {dim} not in 1..=3")));
        }
        if upper.len() != dim || resolution.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: if upper.len() != dim { upper.len() } else { resolution.len() },
            });
        }
        for k in 0..dim {
            if !(lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k]) {
                return Err(Error::InvalidInput(format!(
                    "axis {k}: need finite lower < upper, got [{}, {}]",
                    lower[k], upper[k]
                )));
            }
            if resolution[k] < 2 {
                return Err(Error::InvalidInput(format!(
                    "axis {k}: need at least 2 nodes, got {}",
                    resolution[k]
                )));
            }
        }
        let total = resolution
            .iter()
            .try_fold(1usize, |acc, &r| acc.checked_mul(r))
            .filter(|&t| t <= Self::MAX_NODES);
        if total.is_none() {
            return Err(Error::Resource(format!(
                "grid {resolution:?} exceeds {} nodes",
                Self::MAX_NODES
            )));
        }
        Ok(Self {
            lower,
            upper,
            resolution,
        })
    }

    /// Same bounds and node count on every axis.
    pub fn cube(dim: usize, lower: f64, upper: f64, nodes: usize) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim], vec![nodes; dim])
    }

    /// The sample bounding box expanded by `margin` on every side.
    pub fn around_sample(sample: &SampleMatrix, margin: f64, resolution: Vec<usize>) -> Result<Self> {
        let (lo, hi) = sample.bounding_box();
        Self::new(
            lo.iter().map(|v| v - margin).collect(),
            hi.iter().map(|v| v + margin).collect(),
            resolution,
        )
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.resolution[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).fold(0.0, f64::max)
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.resolution[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + i as f64 * self.spacing(axis)
        }
    }

    /// Index step between neighbours along each axis.
    pub fn strides(&self) -> [usize; 3] {
        let mut s = [0; 3];
        let mut acc = 1;
        for k in (0..self.dim()).rev() {
            s[k] = acc;
            acc *= self.resolution[k];
        }
        s
    }

    pub fn multi_index(&self, mut k: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for axis in (0..self.dim()).rev() {
            idx[axis] = k % self.resolution[axis];
            k /= self.resolution[axis];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let s = self.strides();
        (0..self.dim()).map(|k| idx[k] * s[k]).sum()
    }

    /// Coordinates of node `k` (only the first `dim` entries are meaningful).
    pub fn node(&self, k: usize) -> [f64; 3] {
        let idx = self.multi_index(k);
        let mut x = [0.0; 3];
        for axis in 0..self.dim() {
            x[axis] = self.coord(axis, idx[axis]);
        }
        x
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |k| self.node(k)[..self.dim()].to_vec())
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .enumerate()
            .all(|(k, &v)| v >= self.lower[k] - tol && v <= self.upper[k] + tol)
    }
}

/// Field values at every node of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFieldGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarFieldGrid {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                spec.len()
            )));
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::AtNode {
                node,
                source: Box::new(Error::NonFinite { index: 0, value }),
            });
        }
        Ok(Self { spec, values })
    }

    /// Tabulates a closure of the node coordinates.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let dim = spec.dim();
        let values = (0..spec.len()).map(|k| f(&spec.node(k)[..dim])).collect();
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Field plus a constant.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            spec: self.spec.clone(),
            values: self.values.iter().map(|v| v + offset).collect(),
        }
    }

    /// Nodes with `value >= threshold`.
    pub fn mask_at_least(&self, threshold: f64) -> Vec<bool> {
        self.values.iter().map(|&v| v >= threshold).collect()
    }

    /// Largest absolute difference between face-adjacent nodes.
    pub fn max_neighbour_gap(&self) -> f64 {
        let spec = &self.spec;
        let strides = spec.strides();
        let mut gap = 0.0f64;
        for k in 0..spec.len() {
            let idx = spec.multi_index(k);
            for axis in 0..spec.dim() {
                if idx[axis] + 1 < spec.resolution()[axis] {
                    gap = gap.max((self.values[k] - self.values[k + strides[axis]]).abs());
                }
            }
        }
        gap
    }
}

/// A continuous scalar field that can be evaluated anywhere in its domain.
pub trait ScalarField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<f64>;
}

/// `(-1)^s φ(f)` for a density model and functional.
#[derive(Debug, Clone)]
pub struct CurvatureField<D> {
    model: D,
    functional: Functional,
}

impl<D: Density> CurvatureField<D> {
    pub fn new(model: D, functional: Functional) -> Self {
        Self { model, functional }
    }

    pub fn model(&self) -> &D {
        &self.model
    }

    pub fn functional(&self) -> Functional {
        self.functional
    }
}

impl<D: Density> ScalarField for CurvatureField<D> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        let der = self.model.derivatives(x)?;
        Ok(self.functional.sign() * functional_from_derivatives(&der, self.functional))
    }
}

/// Closure-backed field.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> ScalarField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_point(self.dim, x)?;
        Ok((self.f)(x))
    }
}

/// Another field plus a constant.
pub struct OffsetField<'a> {
    inner: &'a dyn ScalarField,
    offset: f64,
}

impl<'a> OffsetField<'a> {
    pub fn new(inner: &'a dyn ScalarField, offset: f64) -> Self {
        Self { inner, offset }
    }
}

impl ScalarField for OffsetField<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.inner.eval(x)? + self.offset)
    }
}

/// Samples `field` at every node, in parallel.
pub fn sample_field(field: &dyn ScalarField, grid: &GridSpec) -> Result<ScalarFieldGrid> {
    if field.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            found: grid.dim(),
        });
    }
    let dim = grid.dim();
    let values: Vec<Result<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let x = grid.node(k);
            let v = field.eval(&x[..dim])?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite { index: 0, value: v })
            }
        })
        .collect();
    let values = values
        .into_iter()
        .enumerate()
        .map(|(node, r)| r.map_err(|e| Error::AtNode { node, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalarFieldGrid {
        spec: grid.clone(),
        values,
    })
}

/// Sign-folded functional `(-1)^s φ(f)` sampled on the grid.
pub fn evaluate_field<D: Density>(
    model: &D,
    functional: Functional,
    grid: &GridSpec,
) -> Result<ScalarFieldGrid> {
    sample_field(&CurvatureField::new(model, functional), grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub vertices: Vec<[f64; 2]>,
    /// Closed loops repeat their first vertex at the end.
    pub closed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

/// A discretized zero level set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryGeometry {
    Points { points: Vec<f64> },
    Polylines { polylines: Vec<Polyline> },
    Mesh { mesh: TriangleMesh },
}

impl BoundaryGeometry {
    pub fn empty(dim: usize) -> Self {
        match dim {
            1 => BoundaryGeometry::Points { points: vec![] },
            2 => BoundaryGeometry::Polylines { polylines: vec![] },
            _ => BoundaryGeometry::Mesh {
                mesh: TriangleMesh::default(),
            },
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            BoundaryGeometry::Points { .. } => 1,
            BoundaryGeometry::Polylines { .. } => 2,
            BoundaryGeometry::Mesh { .. } => 3,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_count() == 0
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            BoundaryGeometry::Points { points } => points.len(),
            BoundaryGeometry::Polylines { polylines } => {
                polylines.iter().map(|p| p.vertices.len()).sum()
            }
            BoundaryGeometry::Mesh { mesh } => mesh.vertices.len(),
        }
    }

    /// Every vertex as a coordinate vector (closing duplicates included).
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            BoundaryGeometry::Points { points } => points.iter().map(|&p| vec![p]).collect(),
            BoundaryGeometry::Polylines { polylines } => polylines
                .iter()
                .flat_map(|p| p.vertices.iter().map(|v| v.to_vec()))
                .collect(),
            BoundaryGeometry::Mesh { mesh } => {
                mesh.vertices.iter().map(|v| v.to_vec()).collect()
            }
        }
    }
}

/// Dispatches to the 1-, 2- or 3-dimensional extractor. `source`, when given,
/// is the continuous field the grid was sampled from; it drives root
/// bisection in 1D and saddle resolution in 2D.
pub fn extract_zero_level(
    field: &ScalarFieldGrid,
    source: Option<&dyn ScalarField>,
) -> Result<BoundaryGeometry> {
    match field.dim() {
        1 => extract_zero_level_1d(field, source),
        2 => extract_zero_level_2d(field, source),
        _ => Ok(extract_zero_level_3d(field)),
    }
}

const BISECTION_TOL: f64 = 1e-10;
const BISECTION_MAX_ITER: usize = 80;

/// Roots of a 1D field: nodes that are exactly zero, plus one root per
/// interval with a strict sign change, refined by bisection on `source`
/// (linear interpolation when no source is available).
pub fn extract_zero_level_1d(
    field: &ScalarFieldGrid,
    source: Option<&dyn ScalarField>,
) -> Result<BoundaryGeometry> {
    if field.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: field.dim(),
        });
    }
    let spec = field.spec();
    let v = field.values();
    let mut roots = Vec::new();
    for i in 0..v.len() {
        let x0 = spec.coord(0, i);
        if v[i] == 0.0 {
            roots.push(x0);
            continue;
        }
        if i + 1 == v.len() || v[i + 1] == 0.0 || (v[i] > 0.0) == (v[i + 1] > 0.0) {
            continue;
        }
        let x1 = spec.coord(0, i + 1);
        let root = match source {
            Some(src) => bisect(src, x0, v[i], x1)?,
            None => x0 + (x1 - x0) * v[i] / (v[i] - v[i + 1]),
        };
        roots.push(root);
    }
    Ok(BoundaryGeometry::Points { points: roots })
}

fn bisect(src: &dyn ScalarField, mut a: f64, fa: f64, mut b: f64) -> Result<f64> {
    let a_positive = fa > 0.0;
    let mut mid = 0.5 * (a + b);
    for _ in 0..BISECTION_MAX_ITER {
        mid = 0.5 * (a + b);
        let fm = src.eval(&[mid])?;
        if fm.abs() <= BISECTION_TOL || mid == a || mid == b {
            break;
        }
        if (fm > 0.0) == a_positive {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::GaussianMixture;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(vec![0.0], vec![0.0], vec![3]).is_err());
        assert!(GridSpec::new(vec![0.0], vec![1.0], vec![1]).is_err());
        assert!(GridSpec::new(vec![0.0, 0.0], vec![1.0], vec![3, 3]).is_err());
        assert!(matches!(
            GridSpec::cube(3, 0.0, 1.0, 1000),
            Err(Error::Resource(_))
        ));
        let g = GridSpec::new(vec![-1.0, 0.0], vec![1.0, 2.0], vec![3, 5]).unwrap();
        assert_eq!(g.len(), 15);
        assert_eq!(g.node(0)[..2], [-1.0, 0.0]);
        assert_eq!(g.node(14)[..2], [1.0, 2.0]);
        assert_eq!(g.node(1)[..2], [-1.0, 0.5]);
        assert_eq!(g.flat_index(&g.multi_index(11)), 11);
    }

    #[test]
    fn constant_surrogate_folds_sign() {
        let g = GridSpec::cube(2, -1.0, 1.0, 5).unwrap();
        let f = sample_field(&FnField::new(2, |_| 0.25), &g).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.25));
        let neg = FnField::new(2, |_| -0.25);
        let f = sample_field(&neg, &g).unwrap();
        assert!(f.values().iter().all(|&v| v == -0.25));
    }

    #[test]
    fn concave_field_positive_at_origin() {
        let model = GaussianMixture::standard_normal(2).unwrap();
        let g = GridSpec::cube(2, -1.0, 1.0, 3).unwrap();
        let f = evaluate_field(&model, Functional::ConcaveLambda1, &g).unwrap();
        let centre = g.flat_index(&[1, 1]);
        assert!((f.values()[centre] - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn evaluation_errors_carry_node() {
        let g = GridSpec::cube(1, 0.0, 1.0, 4).unwrap();
        let bad = FnField::new(1, |x| if x[0] > 0.5 { f64::NAN } else { 1.0 });
        match sample_field(&bad, &g) {
            Err(Error::AtNode { node, .. }) => assert_eq!(node, 2),
            other => panic!("unexpected {other:?}"),
        }
        let g2 = GridSpec::cube(2, 0.0, 1.0, 4).unwrap();
        assert!(sample_field(&bad, &g2).is_err());
    }

    #[test]
    fn normal_inflection_points() {
        let model = GaussianMixture::standard_normal(1).unwrap();
        let src = CurvatureField::new(&model, Functional::Laplacian);
        let g = GridSpec::cube(1, -4.0, 4.0, 161).unwrap();
        let field = sample_field(&src, &g).unwrap();
        let BoundaryGeometry::Points { points } = extract_zero_level_1d(&field, Some(&src)).unwrap()
        else {
            panic!()
        };
        assert_eq!(points.len(), 2);
        assert!((points[0] + 1.0).abs() < 1e-8 && (points[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cubic_roots() {
        let src = FnField::new(1, |x: &[f64]| x[0].powi(3) - x[0]);
        // 400 nodes keeps every root strictly inside an interval.
        let g = GridSpec::cube(1, -2.0, 2.0, 400).unwrap();
        let field = sample_field(&src, &g).unwrap();
        let BoundaryGeometry::Points { points } = extract_zero_level_1d(&field, Some(&src)).unwrap()
        else {
            panic!()
        };
        assert_eq!(points.len(), 3);
        for (p, e) in points.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((p - e).abs() < 1e-8, "{p} vs {e}");
        }

        // 401 nodes hit 0 and ±1 (up to rounding) on the lattice.
        let g = GridSpec::cube(1, -2.0, 2.0, 401).unwrap();
        let field = sample_field(&src, &g).unwrap();
        let roots = extract_zero_level_1d(&field, Some(&src)).unwrap().vertices();
        assert_eq!(roots.len(), 3);
        for (p, e) in roots.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((p[0] - e).abs() < 1e-8);
        }
    }

    #[test]
    fn positive_field_has_no_roots() {
        let g = GridSpec::cube(1, -1.0, 1.0, 11).unwrap();
        let field = ScalarFieldGrid::from_fn(g, |x| 1.0 + x[0] * x[0]).unwrap();
        assert!(extract_zero_level_1d(&field, None).unwrap().is_empty());
    }
}

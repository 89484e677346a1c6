//! Curvature bumps of kernel density estimates.
//!
//! A *bump* is the region where a curvature functional `φ` of a density has a
//! chosen sign, `{x : (-1)^s φ(f)(x) >= 0}`. This crate estimates `f` with a
//! Gaussian KDE (exact derivatives), evaluates `φ` on a grid, extracts the
//! zero level set as points, polylines or a triangle mesh, and attaches
//! bootstrap confidence regions.
//!
//! ```
//! use curvebump::{evaluate_field, extract_zero_level, Functional, GaussianMixture, GridSpec, Kde};
//! use curvebump::kde::select_bandwidth_normal_scale;
//!
//! let sample = GaussianMixture::standard_normal(1)?.sample(2000, 7)?;
//! let bw = select_bandwidth_normal_scale(&sample, 2)?;
//! let kde = Kde::new(sample, bw)?;
//! let grid = GridSpec::cube(1, -4.0, 4.0, 161)?;
//! let field = evaluate_field(&kde, Functional::ConcaveLambda1, &grid)?;
//! let boundary = extract_zero_level(&field, None)?;
//! assert_eq!(boundary.vertex_count(), 2);
//! # Ok::<(), curvebump::Error>(())
//! ```

pub mod curvature;
pub mod density;
pub mod error;
pub mod harness;
pub mod inference;
pub mod kde;
pub mod levelset;
pub mod linalg;
pub mod mixture;
pub mod sample;

pub use curvature::{
    eigenvalue_separation, eval_functional, functional_from_derivatives, ordered_eigenvalues,
    Functional, OrderedEigenvalues,
};
pub use density::{Density, Derivatives};
pub use error::{Error, ErrorKind, Result};
pub use inference::{
    bootstrap_sup_errors, confidence_regions, empirical_quantile, empirical_tvar, BootstrapPlan,
    ConfidenceMargin, ConfidenceRegionPair, Operator, SupErrorSample, SupErrors,
};
pub use kde::{Bandwidth, BandwidthMode, Kde};
pub use levelset::{
    connected_components, evaluate_field, extract_zero_level, hausdorff_distance,
    BoundaryGeometry, Components, CurvatureField, GridSpec, Polyline, ScalarField,
    ScalarFieldGrid, TriangleMesh,
};
pub use linalg::SymMatrix;
pub use mixture::GaussianMixture;
pub use sample::SampleMatrix;

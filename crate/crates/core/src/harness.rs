//! Monte-Carlo experiments against analytic Gaussian-mixture ground truth.
//!
//! Two experiments are provided:
//!
//! * [`run_convergence_experiment`]: Hausdorff distance between estimated and
//!   true bump boundaries as the sample size grows, with the rate-optimal
//!   bandwidth `h = (log n / n)^{1/(d+2r+4)}`.
//! * [`run_coverage_experiment`]: how often the bootstrap confidence regions
//!   sandwich the smoothed bump `{φ(f̄) >= 0}`, where `f̄ = f * K_h`.
//!
//! Every replicate is keyed by a seed derived from `(master seed, cell,
//! replicate)`, so reports do not depend on thread scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::Functional;
use crate::density::Density;
use crate::error::{Error, Result};
use crate::inference::{
    bootstrap_sup_errors, confidence_regions, margin_for, required_operators, BootstrapPlan,
    ConfidenceMargin,
};
use crate::kde::{normal_scale_rule, Bandwidth, Kde, DEFAULT_TARGET_ORDER};
use crate::levelset::{
    evaluate_field, extract_zero_level, hausdorff_distance, CurvatureField, GridSpec,
    ScalarFieldGrid,
};
use crate::mixture::GaussianMixture;

/// SplitMix64 finalizer; decorrelates nearby seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `rep` in cell `cell`.
pub fn derive_seed(master: u64, cell: usize, rep: usize) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(cell as u64)) ^ rep as u64)
}

/// `(log n / n)^{1/(d+2r+4)}`.
pub fn convergence_bandwidth(n: usize, dim: usize, order: u32) -> f64 {
    let n = n as f64;
    (n.ln() / n).powf(1.0 / (dim as f64 + 2.0 * order as f64 + 4.0))
}

/// Normal-scale bandwidth computed from the population (not sample)
/// standard deviation of the mixture.
pub fn population_normal_scale(gmm: &GaussianMixture, n: usize, order: u32) -> f64 {
    let dim = gmm.dim();
    let weights = gmm.weights();
    let mut total = 0.0;
    for a in 0..dim {
        let mean: f64 = (0..gmm.len()).map(|k| weights[k] * gmm.mean(k)[a]).sum();
        let second: f64 = (0..gmm.len())
            .map(|k| weights[k] * (gmm.covariance(k).get(a, a) + gmm.mean(k)[a].powi(2)))
            .sum();
        total += second - mean * mean;
    }
    normal_scale_rule((total / dim as f64).sqrt(), n, dim, order)
}

/// Summary of one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub n: usize,
    pub h: f64,
    /// Mean over successful replicates; `None` if all failed.
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub replicates: usize,
    pub failures: usize,
    /// Only filled by the coverage experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_zeta: Option<f64>,
    pub seeds: Vec<u64>,
    /// Per-replicate values in seed order; `None` marks a failure.
    pub values: Vec<Option<f64>>,
}

impl CellReport {
    fn from_values(n: usize, h: f64, seeds: Vec<u64>, values: Vec<Option<f64>>) -> Self {
        let ok: Vec<f64> = values.iter().flatten().copied().collect();
        let (mean, sd) = mean_sd(&ok);
        Self {
            n,
            h,
            mean,
            sd,
            replicates: ok.len(),
            failures: values.len() - ok.len(),
            mean_zeta: None,
            seeds,
            values,
        }
    }
}

fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(sd))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Convergence(ConvergenceConfig),
    Coverage(CoverageConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub model: GaussianMixture,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    /// Least-squares slope of `log mean` against `log n` over cells with a
    /// positive mean.
    pub fn loglog_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .cells
            .iter()
            .filter_map(|c| c.mean.filter(|m| *m > 0.0).map(|m| ((c.n as f64).ln(), m.ln())))
            .collect();
        loglog_fit(&pts)
    }

    pub fn means(&self) -> Vec<Option<f64>> {
        self.cells.iter().map(|c| c.mean).collect()
    }
}

fn loglog_fit(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn check_cells(n_list: &[usize], reps: usize) -> Result<()> {
    if n_list.is_empty() || reps == 0 {
        return Err(Error::Config("need at least one sample size and one replicate".into()));
    }
    if let Some(n) = n_list.iter().find(|&&n| n < 2) {
        return Err(Error::Config(format!("sample sizes must be at least 2, got {n}")));
    }
    Ok(())
}

fn check_grid(gmm: &GaussianMixture, grid: &GridSpec) -> Result<()> {
    if grid.dim() != gmm.dim() {
        return Err(Error::DimensionMismatch {
            expected: gmm.dim(),
            found: grid.dim(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub functional: Functional,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub grid: GridSpec,
    /// Derivative order in the bandwidth exponent.
    pub order: u32,
    /// Replace each estimate by the true model; every distance must be 0.
    pub self_test: bool,
    /// Compare boundaries only inside `Θ = {f >= floor · max f}` (`f` the
    /// true density, max over the grid). In near-empty tails a single
    /// sample point creates its own small bump, which dominates the
    /// Hausdorff distance without saying anything about the rate.
    pub density_floor: Option<f64>,
}

impl ConvergenceConfig {
    /// Defaults: `r = 2`, a `161^d` grid over `[-4, 4]^d`, and a density
    /// floor of 1% of the peak.
    pub fn new(functional: Functional, dim: usize, n_list: Vec<usize>, reps: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            functional,
            n_list,
            reps,
            seed,
            grid: GridSpec::cube(dim, -4.0, 4.0, 161)?,
            order: DEFAULT_TARGET_ORDER,
            self_test: false,
            density_floor: Some(0.01),
        })
    }
}

/// Hausdorff distance between the boundary vertices of the estimated and true
/// bumps. Replicates whose estimated boundary is empty count as failures.
pub fn run_convergence_experiment(gmm: &GaussianMixture, config: &ConvergenceConfig) -> Result<ExperimentReport> {
    check_cells(&config.n_list, config.reps)?;
    check_grid(gmm, &config.grid)?;
    let dim = gmm.dim();
    config.functional.check_bump_dimension(dim)?;
    let grid = &config.grid;

    let truth_source = CurvatureField::new(gmm, config.functional);
    let truth_field = evaluate_field(gmm, config.functional, grid)?;
    let floor = match config.density_floor {
        Some(rel) if !(0.0..1.0).contains(&rel) => {
            return Err(Error::Config(format!("density floor must lie in [0, 1), got {rel}")));
        }
        Some(rel) => {
            let mut peak = 0.0f64;
            for x in grid.nodes() {
                peak = peak.max(gmm.value(&x)?);
            }
            rel * peak
        }
        None => 0.0,
    };
    let in_theta = |v: &Vec<f64>| -> Result<bool> { Ok(floor == 0.0 || gmm.value(v)? >= floor) };
    let restrict = |verts: Vec<Vec<f64>>| -> Result<Vec<Vec<f64>>> {
        let mut kept = Vec::with_capacity(verts.len());
        for v in verts {
            if in_theta(&v)? {
                kept.push(v);
            }
        }
        Ok(kept)
    };
    let truth = restrict(extract_zero_level(&truth_field, Some(&truth_source))?.vertices())?;
    if truth.is_empty() {
        return Err(Error::EmptySet("true bump boundary is empty on this grid".into()));
    }

    let mut cells = Vec::with_capacity(config.n_list.len());
    for (c, &n) in config.n_list.iter().enumerate() {
        let h = convergence_bandwidth(n, dim, config.order);
        let seeds: Vec<u64> = (0..config.reps).map(|r| derive_seed(config.seed, c, r)).collect();
        let values: Vec<Result<Option<f64>>> = seeds
            .par_iter()
            .map(|&seed| {
                let estimate = if config.self_test {
                    extract_zero_level(&truth_field, Some(&truth_source))?
                } else {
                    let kde = Kde::new(gmm.sample(n, seed)?, Bandwidth::fixed(h)?)?;
                    let source = CurvatureField::new(&kde, config.functional);
                    let field = evaluate_field(&kde, config.functional, grid)?;
                    extract_zero_level(&field, Some(&source))?
                };
                let verts = restrict(estimate.vertices())?;
                if verts.is_empty() {
                    return Ok(None);
                }
                hausdorff_distance(&verts, &truth).map(Some)
            })
            .collect();
        let values = values.into_iter().collect::<Result<Vec<_>>>()?;
        cells.push(CellReport::from_values(n, h, seeds, values));
    }
    Ok(ExperimentReport {
        config: ExperimentConfig::Convergence(config.clone()),
        model: gmm.clone(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub functional: Functional,
    pub n_list: Vec<usize>,
    /// Fixed bandwidth shared by all cells; `None` uses the population
    /// normal-scale rule at each `n`.
    pub h: Option<f64>,
    pub alpha: f64,
    pub bootstrap: usize,
    pub reps: usize,
    pub seed: u64,
    pub grid: GridSpec,
    /// Test hook: use this margin instead of the bootstrap one.
    pub zeta_override: Option<f64>,
}

impl CoverageConfig {
    /// Defaults: `α = 0.1`, `B = 200`, and a `161^d` grid over `[-4, 4]^d`.
    pub fn new(functional: Functional, dim: usize, n_list: Vec<usize>, reps: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            functional,
            n_list,
            h: None,
            alpha: 0.1,
            bootstrap: 200,
            reps,
            seed,
            grid: GridSpec::cube(dim, -4.0, 4.0, 161)?,
            zeta_override: None,
        })
    }
}

/// Fraction of replicates with `lower ⊆ B̄ ⊆ upper` on the grid, where `B̄` is
/// the bump of the analytically smoothed mixture.
pub fn run_coverage_experiment(gmm: &GaussianMixture, config: &CoverageConfig) -> Result<ExperimentReport> {
    check_cells(&config.n_list, config.reps)?;
    check_grid(gmm, &config.grid)?;
    let dim = gmm.dim();
    let operators = required_operators(config.functional, dim)?;
    if let Some(h) = config.h {
        Bandwidth::fixed(h)?;
    }
    if config.zeta_override.is_none() {
        BootstrapPlan::new(config.bootstrap, config.alpha, 0)?;
    }
    let grid = &config.grid;

    let mut cells = Vec::with_capacity(config.n_list.len());
    for (c, &n) in config.n_list.iter().enumerate() {
        let h = config
            .h
            .unwrap_or_else(|| population_normal_scale(gmm, n, DEFAULT_TARGET_ORDER));
        let target = evaluate_field(&gmm.smoothed(h)?, config.functional, grid)?.mask_at_least(0.0);
        let seeds: Vec<u64> = (0..config.reps).map(|r| derive_seed(config.seed, c, r)).collect();
        let outcomes: Vec<Result<(bool, f64)>> = seeds
            .par_iter()
            .map(|&seed| {
                let sample = gmm.sample(n, seed)?;
                let bw = Bandwidth::fixed(h)?;
                let kde = Kde::new(sample.clone(), bw)?;
                let field: ScalarFieldGrid = evaluate_field(&kde, config.functional, grid)?;
                let margin = match config.zeta_override {
                    Some(z) => ConfidenceMargin::fixed(z, config.alpha),
                    None => {
                        let plan = BootstrapPlan::new(config.bootstrap, config.alpha, splitmix64(seed))?;
                        let errs = bootstrap_sup_errors(&sample, bw, grid, &plan, &operators)?;
                        margin_for(config.functional, &errs, dim, config.alpha, h, None)?
                    }
                };
                let pair = confidence_regions(&field, &margin, None)?;
                Ok((pair.sandwiches(&target), margin.zeta))
            })
            .collect();
        let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        let values = outcomes.iter().map(|&(hit, _)| Some(if hit { 1.0 } else { 0.0 })).collect();
        let zetas: Vec<f64> = outcomes.iter().map(|&(_, z)| z).collect();
        let mut cell = CellReport::from_values(n, h, seeds, values);
        cell.mean_zeta = mean_sd(&zetas).0;
        cells.push(cell);
    }
    Ok(ExperimentReport {
        config: ExperimentConfig::Coverage(config.clone()),
        model: gmm.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..4).flat_map(|c| (0..50).map(move |r| derive_seed(7, c, r))).collect();
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), a.len());
        assert_eq!(derive_seed(7, 2, 3), derive_seed(7, 2, 3));
        assert_ne!(derive_seed(7, 2, 3), derive_seed(8, 2, 3));
    }

    #[test]
    fn bandwidth_rules() {
        let h = convergence_bandwidth(1000, 2, 2);
        assert!((h - (1000f64.ln() / 1000.0).powf(0.1)).abs() < 1e-15);
        let gmm = GaussianMixture::standard_normal(1).unwrap();
        assert_eq!(population_normal_scale(&gmm, 400, 2), normal_scale_rule(1.0, 400, 1, 2));
        let boom = GaussianMixture::boomerang();
        // Var = 1 + 9/4 along x, 1 along y.
        let sigma = ((3.25 + 1.0) / 2.0f64).sqrt();
        assert!((population_normal_scale(&boom, 500, 2) - normal_scale_rule(sigma, 500, 2, 2)).abs() < 1e-14);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [100.0f64, 1000.0, 10000.0]
            .iter()
            .map(|&n| (n.ln(), (3.0 * n.powf(-0.2)).ln()))
            .collect();
        assert!((loglog_fit(&pts).unwrap() + 0.2).abs() < 1e-12);
        assert!(loglog_fit(&pts[..1]).is_none());
    }

    #[test]
    fn convergence_self_test_is_exact() {
        let gmm = GaussianMixture::boomerang();
        let mut cfg = ConvergenceConfig::new(Functional::Laplacian, 2, vec![100, 200], 2, 1).unwrap();
        cfg.grid = GridSpec::cube(2, -3.0, 3.0, 61).unwrap();
        cfg.self_test = true;
        let report = run_convergence_experiment(&gmm, &cfg).unwrap();
        assert_eq!(report.cells.len(), 2);
        for cell in &report.cells {
            assert_eq!(cell.mean, Some(0.0));
            assert_eq!(cell.replicates, 2);
            assert_eq!(cell.seeds.len(), 2);
        }
    }

    #[test]
    fn convergence_is_deterministic() {
        let gmm = GaussianMixture::boomerang();
        let mut cfg = ConvergenceConfig::new(Functional::Laplacian, 2, vec![300], 3, 5).unwrap();
        cfg.grid = GridSpec::cube(2, -3.0, 3.0, 41).unwrap();
        let a = run_convergence_experiment(&gmm, &cfg).unwrap();
        let b = run_convergence_experiment(&gmm, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.cells[0].mean.unwrap() > 0.0);
    }

    #[test]
    fn coverage_hooks() {
        let gmm = GaussianMixture::standard_normal(1).unwrap();
        let mut cfg = CoverageConfig::new(Functional::Laplacian, 1, vec![200], 10, 3).unwrap();
        cfg.zeta_override = Some(f64::INFINITY);
        let report = run_coverage_experiment(&gmm, &cfg).unwrap();
        assert_eq!(report.cells[0].mean, Some(1.0));

        cfg.zeta_override = Some(0.0);
        let report = run_coverage_experiment(&gmm, &cfg).unwrap();
        assert!(report.cells[0].mean.unwrap() <= 0.1);
    }

    #[test]
    fn coverage_rejects_unsupported_functionals() {
        let gmm = GaussianMixture::boomerang();
        let cfg = CoverageConfig::new(Functional::MeanCurvature, 2, vec![200], 1, 3).unwrap();
        assert!(matches!(run_coverage_experiment(&gmm, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let gmm = GaussianMixture::boomerang();
        let cfg = ConvergenceConfig::new(Functional::Laplacian, 1, vec![200], 1, 3).unwrap();
        assert!(matches!(
            run_convergence_experiment(&gmm, &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}

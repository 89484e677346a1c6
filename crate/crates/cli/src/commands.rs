use std::path::Path;

use curvebump::harness::{
    run_convergence_experiment, run_coverage_experiment, ConvergenceConfig, CoverageConfig,
    ExperimentReport,
};
use curvebump::inference::{
    bootstrap_sup_errors, margin_for, required_operators, BootstrapPlan, LOW_REPLICATE_THRESHOLD,
};
use curvebump::kde::{select_bandwidth_normal_scale, DEFAULT_TARGET_ORDER};
use curvebump::levelset::ScalarFieldGrid;
use curvebump::mixture::MixtureParams;
use curvebump::{
    confidence_regions, connected_components, eigenvalue_separation, evaluate_field,
    extract_zero_level, Bandwidth, BoundaryGeometry, CurvatureField, Functional, GaussianMixture,
    GridSpec, Kde, SampleMatrix,
};

use crate::error::{CliError, CliResult};
use crate::output::{mask_bits, pieces, to_json, write_atomic, BumpDocument, ConfigEcho, Region};
use crate::svg::{self, Band};
use crate::{ConfidenceArgs, Experiment, FitArgs, Model, SimulateArgs};

fn parse_bandwidth(raw: &str) -> CliResult<Option<f64>> {
    if raw.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(h) if h.is_finite() && h > 0.0 => Ok(Some(h)),
        _ => Err(CliError::Usage(format!("bandwidth must be `auto` or a positive number, got `{raw}`"))),
    }
}

fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 401,
        2 => 161,
        _ => 101,
    }
}

fn parse_resolution(raw: Option<&str>, dim: usize) -> CliResult<Vec<usize>> {
    let Some(raw) = raw else {
        return Ok(vec![default_resolution(dim); dim]);
    };
    let parts: Vec<usize> = raw
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("cannot parse grid `{raw}`")))?;
    match parts.len() {
        1 => Ok(vec![parts[0]; dim]),
        k if k == dim => Ok(parts),
        k => Err(CliError::Usage(format!("grid has {k} axes, data has {dim}"))),
    }
}

fn parse_bounds(raw: &str, dim: usize) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let bad = || CliError::Usage(format!("bounds must look like `lo:hi[,lo:hi...]`, got `{raw}`"));
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in raw.split(',') {
        let (a, b) = part.split_once(':').ok_or_else(bad)?;
        lo.push(a.trim().parse::<f64>().map_err(|_| bad())?);
        hi.push(b.trim().parse::<f64>().map_err(|_| bad())?);
    }
    match lo.len() {
        1 => Ok((vec![lo[0]; dim], vec![hi[0]; dim])),
        k if k == dim => Ok((lo, hi)),
        k => Err(CliError::Usage(format!("bounds have {k} axes, data has {dim}"))),
    }
}

fn build_grid(grid: Option<&str>, bounds: Option<&str>, sample: &SampleMatrix, h: f64) -> CliResult<GridSpec> {
    let dim = sample.dim();
    let resolution = parse_resolution(grid, dim)?;
    let spec = match bounds {
        None => GridSpec::around_sample(sample, 3.0 * h, resolution),
        Some(b) if b.eq_ignore_ascii_case("auto") => GridSpec::around_sample(sample, 3.0 * h, resolution),
        Some(b) => {
            let (lo, hi) = parse_bounds(b, dim)?;
            GridSpec::new(lo, hi, resolution)
        }
    };
    Ok(spec?)
}

/// Shared first half of `fit` and `confidence`.
struct Estimate {
    kde: Kde,
    grid: GridSpec,
    field: ScalarFieldGrid,
    boundary: BoundaryGeometry,
    components: usize,
    separation: Option<f64>,
    warnings: Vec<String>,
}

fn estimate(args: &FitArgs) -> CliResult<Estimate> {
    let sample = crate::ingest::read_points(&args.input, &args.columns)?;
    let dim = sample.dim();
    args.functional.check_bump_dimension(dim)?;
    let bandwidth = match parse_bandwidth(&args.bandwidth)? {
        Some(h) => Bandwidth::fixed(h)?,
        None => select_bandwidth_normal_scale(&sample, DEFAULT_TARGET_ORDER)?,
    };
    let grid = build_grid(args.grid.as_deref(), args.bounds.as_deref(), &sample, bandwidth.h)?;
    let kde = Kde::new(sample, bandwidth)?;
    let field = evaluate_field(&kde, args.functional, &grid)?;
    let source = CurvatureField::new(&kde, args.functional);
    let boundary = extract_zero_level(&field, Some(&source))?;
    let components = connected_components(&field).count;

    let mut warnings = Vec::new();
    let eigen = matches!(args.functional, Functional::ConcaveLambda1 | Functional::ConvexLambdaD);
    let separation = if eigen && dim >= 2 && !boundary.is_empty() {
        let sep = eigenvalue_separation(&kde, boundary.vertices())?;
        let scale = field.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sep <= 1e-6 * scale {
            warnings.push(format!(
                "Hessian eigenvalues nearly coincide on the boundary (gap {sep:.3e}); \
                 the boundary may be unstable there"
            ));
        }
        Some(sep)
    } else {
        None
    };
    if args.svg.is_some() && dim > 2 {
        warnings.push("SVG export is only available for d <= 2; skipped".into());
    }
    Ok(Estimate {
        kde,
        grid,
        field,
        boundary,
        components,
        separation,
        warnings,
    })
}

fn echo(args: &FitArgs) -> ConfigEcho {
    ConfigEcho {
        input: args.input.display().to_string(),
        columns: args.columns.clone(),
        functional: args.functional,
        bandwidth: args.bandwidth.clone(),
        grid: args.grid.clone(),
        bounds: args.bounds.clone(),
        alpha: None,
        bootstrap: None,
        resample_size: None,
        seed: None,
        gaussian_constant: None,
    }
}

fn document(args: &FitArgs, est: &Estimate, command: &'static str) -> BumpDocument {
    BumpDocument {
        schema_version: crate::output::SCHEMA_VERSION,
        command,
        dimension: est.grid.dim(),
        functional: args.functional,
        sign_selector: args.functional.sign_selector(),
        bandwidth: est.kde.bandwidth(),
        grid: est.grid.clone(),
        sample_size: est.kde.sample().len(),
        pieces: pieces(&est.boundary),
        components: est.components,
        mask: mask_bits(&est.field.mask_at_least(0.0)),
        zeta: None,
        margin: None,
        upper: None,
        lower: None,
        eigenvalue_separation: est.separation,
        low_replicate: false,
        warnings: est.warnings.clone(),
        config: echo(args),
    }
}

fn write_svg(path: Option<&Path>, est: &Estimate, band: Option<Band<'_>>) -> CliResult<()> {
    match path {
        Some(p) if est.grid.dim() <= 2 => {
            write_atomic(p, svg::render(&est.kde, &est.grid, &est.boundary, band).as_bytes())
        }
        _ => Ok(()),
    }
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let est = estimate(args)?;
    let doc = document(args, &est, "fit");
    write_atomic(&args.out, &to_json(&doc)?)?;
    write_svg(args.svg.as_deref(), &est, None)
}

pub fn confidence(args: &ConfidenceArgs) -> CliResult<()> {
    let fit = &args.fit;
    let mut plan = BootstrapPlan::new(args.bootstrap, args.alpha, args.seed)?;
    if let Some(m) = args.resample_size {
        plan = plan.with_resample_size(m)?;
    }
    // Fail on unsupported functionals before any expensive work.
    let probe_dim = crate::ingest::read_points(&fit.input, &fit.columns)?.dim();
    let operators = required_operators(fit.functional, probe_dim)?;

    let est = estimate(fit)?;
    let h = est.kde.h();
    let errs = bootstrap_sup_errors(est.kde.sample(), est.kde.bandwidth(), &est.grid, &plan, &operators)?;
    let margin = margin_for(fit.functional, &errs, probe_dim, args.alpha, h, args.gaussian_constant)?;
    let source = CurvatureField::new(&est.kde, fit.functional);
    let pair = confidence_regions(&est.field, &margin, Some(&source))?;
    if !pair.is_nested() {
        return Err(CliError::Data("internal error: confidence regions are not nested".into()));
    }

    let region = |offset: f64, mask: &[bool], boundary: &BoundaryGeometry| -> Region {
        let components = if offset.is_finite() {
            connected_components(&est.field.shifted(offset)).count
        } else {
            usize::from(mask.iter().any(|&m| m))
        };
        Region {
            pieces: pieces(boundary),
            components,
            mask: mask_bits(mask),
        }
    };
    let mut doc = document(fit, &est, "confidence");
    doc.zeta = Some(margin.zeta);
    doc.margin = Some(margin);
    doc.upper = Some(region(margin.zeta, &pair.upper_mask, &pair.upper_boundary));
    doc.lower = Some(region(-margin.zeta, &pair.lower_mask, &pair.lower_boundary));
    doc.low_replicate = plan.is_low_replicate();
    if doc.low_replicate {
        doc.warnings.push(format!(
            "only {} bootstrap replicates (fewer than {LOW_REPLICATE_THRESHOLD}); the margin is unreliable",
            plan.replicates
        ));
    }
    doc.config.alpha = Some(args.alpha);
    doc.config.bootstrap = Some(args.bootstrap);
    doc.config.resample_size = args.resample_size;
    doc.config.seed = Some(args.seed);
    doc.config.gaussian_constant = args.gaussian_constant;
    write_atomic(&fit.out, &to_json(&doc)?)?;
    write_svg(
        fit.svg.as_deref(),
        &est,
        Some(Band {
            upper: &pair.upper_boundary,
            lower: &pair.lower_boundary,
            upper_mask: &pair.upper_mask,
            lower_mask: &pair.lower_mask,
        }),
    )
}

fn load_model(args: &SimulateArgs) -> CliResult<GaussianMixture> {
    if let Some(path) = &args.model_file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        let params: MixtureParams = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        return Ok(GaussianMixture::try_from(params)?);
    }
    let default = match args.experiment {
        Experiment::Convergence => Model::Boomerang,
        Experiment::Coverage => Model::Normal,
    };
    Ok(match args.model.unwrap_or(default) {
        Model::Boomerang => GaussianMixture::boomerang(),
        Model::Normal => GaussianMixture::standard_normal(args.dim)?,
    })
}

fn simulation_grid(args: &SimulateArgs, dim: usize, default: GridSpec) -> CliResult<GridSpec> {
    if args.grid.is_none() && args.bounds.is_none() {
        return Ok(default);
    }
    let resolution = match &args.grid {
        Some(g) => parse_resolution(Some(g), dim)?,
        None => default.resolution().to_vec(),
    };
    let (lo, hi) = match &args.bounds {
        Some(b) => parse_bounds(b, dim)?,
        None => (default.lower().to_vec(), default.upper().to_vec()),
    };
    Ok(GridSpec::new(lo, hi, resolution)?)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let gmm = load_model(args)?;
    let dim = gmm.dim();
    let report = match args.experiment {
        Experiment::Convergence => {
            let n_list = if args.n_list.is_empty() { vec![500, 2000, 8000] } else { args.n_list.clone() };
            let mut cfg = ConvergenceConfig::new(args.functional, dim, n_list, args.reps.unwrap_or(20), args.seed)?;
            cfg.grid = simulation_grid(args, dim, cfg.grid.clone())?;
            cfg.self_test = args.self_test;
            if let Some(floor) = args.density_floor {
                cfg.density_floor = Some(floor);
            }
            run_convergence_experiment(&gmm, &cfg)?
        }
        Experiment::Coverage => {
            let n_list = if args.n_list.is_empty() { vec![200, 3200] } else { args.n_list.clone() };
            let mut cfg = CoverageConfig::new(args.functional, dim, n_list, args.reps.unwrap_or(200), args.seed)?;
            cfg.grid = simulation_grid(args, dim, cfg.grid.clone())?;
            cfg.h = parse_bandwidth(&args.bandwidth)?;
            cfg.alpha = args.alpha;
            cfg.bootstrap = args.bootstrap;
            cfg.zeta_override = args.zeta_override;
            run_coverage_experiment(&gmm, &cfg)?
        }
    };
    write_atomic(&args.out, &to_json(&report)?)?;
    if let Some(path) = &args.csv {
        write_atomic(path, &report_csv(&report)?)?;
    }
    for cell in &report.cells {
        println!(
            "n={:<6} h={:.4} mean={} sd={} ok={} failed={}",
            cell.n,
            cell.h,
            fmt_opt(cell.mean),
            fmt_opt(cell.sd),
            cell.replicates,
            cell.failures
        );
    }
    if let (Experiment::Convergence, Some(slope)) = (args.experiment, report.loglog_slope()) {
        println!("log-log slope {slope:.4}");
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| format!("{v:.6}"))
}

fn report_csv(report: &ExperimentReport) -> CliResult<Vec<u8>> {
    let fail = |e: csv::Error| CliError::Data(format!("cannot write CSV: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "h", "mean", "sd", "replicates", "failures", "mean_zeta", "seeds"])
        .map_err(fail)?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for c in &report.cells {
        let seeds: Vec<String> = c.seeds.iter().map(u64::to_string).collect();
        w.write_record([
            c.n.to_string(),
            c.h.to_string(),
            opt(c.mean),
            opt(c.sd),
            c.replicates.to_string(),
            c.failures.to_string(),
            opt(c.mean_zeta),
            seeds.join(";"),
        ])
        .map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Data(format!("cannot write CSV: {e}")))
}

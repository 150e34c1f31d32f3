//! Problem runs: solve, radial limits, classification, condition report and
//! sandwich check, written to a run directory; sweeps of such runs.

use crate::manifest::{RunDir, MANIFEST};
use crate::svg::{line_plot, Series};
use anyhow::anyhow;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;
use wedgecap::comparison::{barrier_minor_radius, sandwich_check, ComparisonError};
use wedgecap::conditions::{check_theorem1, check_theorem2, choose_comparison_angles, concus_finn_admissible, AngleStrategy, ConditionReport, Verdict};
use wedgecap::config::{expand_sweep, value_label, ProblemConfig, SweepConfig};
use wedgecap::exec::{map_slice, Exec};
use wedgecap::radial::{
    classify, default_radii, default_tolerance, radial_profile, resolved_radii, side_limit, theta_grid, trend_at_plus, ClassKind,
    Classification, LimitFit, RadialProfile,
};
use wedgecap::solver::{solve, ScalarField, SolveError};
use wedgecap::torus::MuFamily;
use wedgecap::BoundaryTag;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0:#}")]
    Validation(anyhow::Error),
    #[error("{0:#}")]
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

fn validation(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Validation(e.into())
}

fn numerical(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Numerical(e.into())
}

/// I/O problems while writing results count as validation failures (bad
/// output location), not numerical ones.
fn io(e: anyhow::Error) -> Failure {
    Failure::Validation(e)
}

#[derive(Debug, Clone, Copy)]
pub struct RunContext {
    pub seed: u64,
    pub threads: usize,
    pub exec: Exec,
}

#[derive(Debug, Clone, Copy)]
pub struct Stages {
    pub radial: bool,
    pub sandwich: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub classification: Option<Classification>,
    /// `constant_all`, `fan`, `unclassified`, `noisy_profile`, or empty when
    /// the radial stage did not run.
    pub label: String,
    pub z2: Option<LimitFit>,
    pub profile: Option<RadialProfile>,
    pub sandwich_valid: Option<bool>,
    pub outside_theorem: bool,
}

pub fn read_config(path: &Path) -> Result<(String, ProblemConfig), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| validation(anyhow!("reading {}: {e}", path.display())))?;
    let cfg = ProblemConfig::from_toml(&text).map_err(|e| validation(anyhow!("{}: {e}", path.display())))?;
    Ok((text, cfg))
}

/// Runs one problem file into `out`, writing a manifest whatever the outcome.
pub fn run_solve(config: &Path, out: &Path, command: &str, stages: Stages, ctx: RunContext) -> Result<RunSummary, Failure> {
    let (text, cfg) = read_config(config)?;
    if stages.sandwich && cfg.sandwich.is_none() {
        return Err(validation(anyhow!("{}: missing [sandwich] section (keys `mu`, `delta`)", config.display())));
    }
    let mut run = RunDir::create(out, command, &text, ctx.seed, ctx.threads).map_err(io)?;
    let result = run_problem(&cfg, &text, &mut run, stages, ctx);
    let status = match &result {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("failed: {e}"),
    };
    run.finish(&status).map_err(io)?;
    result
}

/// Solve plus the configured post-processing; artifacts go to `run`.
pub fn run_problem(cfg: &ProblemConfig, text: &str, run: &mut RunDir, stages: Stages, ctx: RunContext) -> Result<RunSummary, Failure> {
    run.manifest.config = toml::Value::try_from(cfg).ok();
    run.write("config.toml", text).map_err(io)?;
    let mut summary = RunSummary::default();
    let domain = &cfg.domain;

    if let Some(c) = &cfg.conditions {
        let mut report = match (c.lambda1, c.lambda2) {
            (Some(l1), Some(l2)) => check_theorem2(domain.alpha(), c.gamma2, l1, l2),
            _ => check_theorem1(domain.alpha(), c.gamma2),
        };
        attach_corner_data(&mut report, cfg, c.lambda1.zip(c.lambda2));
        summary.outside_theorem = report.verdict() != Verdict::Holds;
        run.write("conditions.txt", &report.to_text()).map_err(io)?;
    }

    let t = Instant::now();
    let mesh = Arc::new(cfg.build_mesh().map_err(|e| numerical(anyhow!("mesh: {e}")))?);
    run.time("mesh", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let mut options = cfg.solver.clone();
    options.exec = ctx.exec;
    let field = match solve(domain, mesh, &cfg.curvature, &cfg.boundary, &options) {
        Ok(f) => f,
        Err(e) => {
            run.time("solve", t.elapsed().as_secs_f64());
            if let Some(best) = e.best() {
                run.write("diagnostics.toml", &best.diagnostics_text()).map_err(io)?;
            }
            return Err(match e {
                SolveError::NoConvergence { .. } | SolveError::LineSearchStalled { .. } => numerical(e),
                other => validation(other),
            });
        }
    };
    run.time("solve", t.elapsed().as_secs_f64());
    run.write("solution.csv", &field.to_csv()).map_err(io)?;
    run.write("diagnostics.toml", &field.diagnostics_text()).map_err(io)?;

    if stages.radial {
        let t = Instant::now();
        radial_stage(cfg, &field, run, &mut summary, ctx)?;
        run.time("radial", t.elapsed().as_secs_f64());
    }
    if stages.sandwich {
        if let Some(s) = &cfg.sandwich {
            let t = Instant::now();
            let gamma2 = cfg
                .boundary
                .corner_angle(domain, BoundaryTag::SideMinus)
                .ok_or_else(|| validation(anyhow!("sandwich: the minus side must be capillary")))?;
            let family = MuFamily::new(domain.alpha(), gamma2, s.mu).map_err(|e| validation(anyhow!("sandwich: {e}")))?;
            let r0 = barrier_minor_radius(&field).map_err(|e| numerical(anyhow!("sandwich: {e}")))?;
            let pair = family.barriers(r0);
            let report = sandwich_check(&field, &family, &pair, s.w, s.delta).map_err(|e| match e {
                ComparisonError::BelowResolution { .. } => numerical(anyhow!("sandwich: {e}")),
                _ => validation(anyhow!("sandwich: {e}")),
            })?;
            summary.sandwich_valid = Some(report.valid());
            run.write("sandwich.toml", &report.to_text()).map_err(io)?;
            run.write("sandwich.csv", &report.to_csv()).map_err(io)?;
            run.time("sandwich", t.elapsed().as_secs_f64());
        }
    }
    Ok(summary)
}

/// Adds the Concus-Finn check (both sides capillary) and, when the condition
/// holds, the comparison angles.
fn attach_corner_data(report: &mut ConditionReport, cfg: &ProblemConfig, lambdas: Option<(f64, f64)>) {
    let d = &cfg.domain;
    if let (Some(g1), Some(g2)) = (
        cfg.boundary.corner_angle(d, BoundaryTag::SidePlus),
        cfg.boundary.corner_angle(d, BoundaryTag::SideMinus),
    ) {
        report.concus_finn = Some(concus_finn_admissible(d.alpha(), g1, g2));
    }
    report.chosen = choose_comparison_angles(d.alpha(), report.gamma2, lambdas, AngleStrategy::Midpoint).ok();
}

fn radial_stage(cfg: &ProblemConfig, field: &ScalarField, run: &mut RunDir, summary: &mut RunSummary, ctx: RunContext) -> Result<(), Failure> {
    let thetas = theta_grid(cfg.domain.alpha(), cfg.radial.rays);
    let radii = resolved_radii(field, &thetas, &default_radii(cfg.domain.delta_star(), cfg.radial.levels));
    if radii.len() < 4 {
        return Err(numerical(anyhow!(
            "radial: only {} of the default radii are resolved by the mesh near O; refine or grade the mesh",
            radii.len()
        )));
    }
    let profile = radial_profile(field, &thetas, &radii, ctx.exec).map_err(|e| numerical(anyhow!("radial: {e}")))?;
    let z2 = side_limit(field, BoundaryTag::SideMinus, &radii).map_err(|e| numerical(anyhow!("side limit: {e}")))?;
    let tol = cfg.radial.tol.unwrap_or_else(|| default_tolerance(field, &profile));
    let classification = classify(&profile, z2.limit, tol);
    let trend = trend_at_plus(&profile, tol);

    let mut block = String::from("schema = 1\n");
    match &classification {
        Ok(c) => {
            let _ = writeln!(block, "kind = \"{}\"", c.name());
            match &c.kind {
                ClassKind::Fan { alpha1, alpha2, direction } => {
                    let _ = writeln!(block, "alpha1 = {alpha1:e}\nalpha2 = {alpha2:e}\ndirection = \"{}\"", direction_name(*direction));
                }
                ClassKind::Unclassified { reason } => {
                    let _ = writeln!(block, "reason = {reason:?}");
                }
                ClassKind::ConstantAll => {}
            }
            let _ = writeln!(block, "total_variation = {:e}\nside_gap = {:e}", c.total_variation, c.side_gap);
            summary.label = c.name().to_string();
        }
        Err(e) => {
            let _ = writeln!(block, "kind = \"noisy_profile\"\nreason = {:?}", e.to_string());
            summary.label = "noisy_profile".into();
        }
    }
    let _ = writeln!(block, "tol = {tol:e}\nz2 = {:e}\nz2_error = {:e}", z2.limit, z2.error_bar);
    let _ = writeln!(block, "trend_at_plus = \"{}\"", trend.map_or("flat", direction_name));
    let _ = writeln!(block, "outside_theorem = {}", summary.outside_theorem);
    let radii_text: Vec<String> = radii.iter().map(|r| format!("{r:e}")).collect();
    let _ = writeln!(block, "radii = [{}]", radii_text.join(", "));

    run.write("radial.csv", &profile.to_csv(classification.as_ref().ok(), Some(&z2))).map_err(io)?;
    run.write("classification.toml", &block).map_err(io)?;
    let series = Series { label: "Rf".into(), points: profile.theta_grid.iter().copied().zip(profile.limits.iter().copied()).collect() };
    run.write("radial.svg", &line_plot("radial limits", "theta", "Rf(theta)", &[series])).map_err(io)?;

    summary.classification = classification.ok();
    summary.z2 = Some(z2);
    summary.profile = Some(profile);
    Ok(())
}

fn direction_name(d: wedgecap::radial::Direction) -> &'static str {
    match d {
        wedgecap::radial::Direction::Increasing => "increasing",
        wedgecap::radial::Direction::Decreasing => "decreasing",
    }
}

/// Runs every grid point of a sweep into `out/point_NNN`, then writes the
/// aggregate table and an overlay of the radial profiles. Failing sub-runs are
/// reported in the table and do not stop the others.
pub fn run_sweep(config: &Path, sweep: Option<&Path>, out: &Path, ctx: RunContext) -> Result<Vec<Result<RunSummary, Failure>>, Failure> {
    let text = std::fs::read_to_string(config).map_err(|e| validation(anyhow!("reading {}: {e}", config.display())))?;
    let sweep_cfg = match sweep {
        Some(p) => {
            let s = std::fs::read_to_string(p).map_err(|e| validation(anyhow!("reading {}: {e}", p.display())))?;
            Some(toml::from_str::<SweepConfig>(&s).map_err(|e| validation(anyhow!("{}: {}", p.display(), e.message())))?)
        }
        None => None,
    };
    let points = expand_sweep(&text, sweep_cfg.as_ref()).map_err(|e| validation(anyhow!("{}: {e}", config.display())))?;
    let mut top = RunDir::create(out, "sweep", &text, ctx.seed, ctx.threads).map_err(io)?;
    top.write("config.toml", &text).map_err(io)?;
    if let Some(s) = &sweep_cfg {
        top.write("sweep.toml", &toml::to_string(s).map_err(|e| io(e.into()))?).map_err(io)?;
    }

    let t = Instant::now();
    let indexed: Vec<usize> = (0..points.len()).collect();
    let stages = Stages { radial: true, sandwich: true };
    let runs = map_slice(ctx.exec, &indexed, |&i| {
        let name = format!("point_{i:03}");
        let result = match &points[i].config {
            Err(e) => Err(validation(anyhow!("{e}"))),
            Ok(cfg) => {
                let sub_text = toml::to_string(cfg).unwrap_or_default();
                match RunDir::create(&out.join(&name), "solve", &sub_text, ctx.seed, ctx.threads) {
                    Err(e) => Err(io(e)),
                    Ok(mut sub) => {
                        let r = run_problem(cfg, &sub_text, &mut sub, stages, ctx);
                        let status = r.as_ref().map_or_else(|e| format!("failed: {e}"), |_| "ok".into());
                        let files = sub.manifest.artifacts.clone();
                        return (name, files, sub.finish(&status).map_err(io).and(r));
                    }
                }
            }
        };
        (name, Vec::new(), result)
    });
    top.time("sweep", t.elapsed().as_secs_f64());

    let keys: Vec<String> = points.first().map_or(vec![], |p| p.assignments.iter().map(|a| a.0.clone()).collect());
    let mut csv = String::from("# schema=1\n");
    let _ = writeln!(csv, "{},point,status,classification,alpha1,alpha2,fan_width,z2,z2_error,tol,sandwich_valid", keys.join(","));
    let mut overlay = Vec::new();
    let mut widths = Vec::new();
    for (p, (name, files, result)) in points.iter().zip(&runs) {
        for f in files {
            top.record(&format!("{name}/{f}"));
        }
        if !files.is_empty() {
            top.record(&format!("{name}/{MANIFEST}"));
        }
        let labels: Vec<String> = p.assignments.iter().map(|a| value_label(&a.1)).collect();
        let row = match result {
            Ok(s) => {
                let (a1, a2) = match s.classification.as_ref().map(|c| &c.kind) {
                    Some(ClassKind::Fan { alpha1, alpha2, .. }) => (Some(*alpha1), Some(*alpha2)),
                    _ => (None, None),
                };
                let width = a1.zip(a2).map(|(a, b)| b - a);
                widths.push(width);
                if let Some(pr) = &s.profile {
                    overlay.push(Series {
                        label: labels.join(", "),
                        points: pr.theta_grid.iter().copied().zip(pr.limits.iter().copied()).collect(),
                    });
                }
                let num = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.17e}"));
                format!(
                    "ok,{},{},{},{},{},{},{},{}",
                    s.label,
                    num(a1),
                    num(a2),
                    num(width),
                    num(s.z2.map(|z| z.limit)),
                    num(s.z2.map(|z| z.error_bar)),
                    num(s.classification.as_ref().map(|c| c.tol)),
                    s.sandwich_valid.map_or(String::new(), |v| v.to_string())
                )
            }
            Err(e) => {
                widths.push(None);
                let kind = if e.exit_code() == 1 { "invalid" } else { "failed" };
                format!("{kind},,,,,,,,")
            }
        };
        let _ = writeln!(csv, "{},{name},{row}", labels.join(","));
    }
    let trend = if widths.iter().all(Option::is_some) && widths.len() > 1 {
        let w: Vec<f64> = widths.iter().flatten().copied().collect();
        if w.windows(2).all(|p| p[1] <= p[0]) {
            "nonincreasing"
        } else if w.windows(2).all(|p| p[1] >= p[0]) {
            "nondecreasing"
        } else {
            "not_monotone"
        }
    } else {
        "not_applicable"
    };
    let _ = writeln!(csv, "# fan_width_trend = {trend}");
    top.write("aggregate.csv", &csv).map_err(io)?;
    top.write("rf_overlay.svg", &line_plot("radial limits", "theta", "Rf(theta)", &overlay)).map_err(io)?;
    let failed = runs.iter().filter(|r| r.2.is_err()).count();
    top.finish(&if failed == 0 { "ok".into() } else { format!("{failed} of {} sub-runs failed", runs.len()) }).map_err(io)?;
    Ok(runs.into_iter().map(|r| r.2).collect())
}

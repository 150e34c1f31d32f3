// `!(x < y)` deliberately treats NaN bounds as degenerate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod manifest;
mod pipeline;
mod svg;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};
use manifest::RunDir;
use pipeline::{Failure, RunContext, Stages};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wedgecap::angle::parse_angle;
use wedgecap::conditions::{check_theorem1, check_theorem2, choose_comparison_angles, concus_finn_admissible, AngleStrategy};
use wedgecap::exec::Exec;
use wedgecap::torus::{graph_certification, mean_curvature_audit, minor_radius, AuditGrid, Sheet, TorusBarrier};

/// Capillary graphs over wedge domains: solve, radial limits, corner
/// conditions and barrier comparisons.
#[derive(Parser)]
#[command(name = "wedgecap", version)]
struct Cli {
    /// Problem file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory for artifacts and the manifest.
    #[arg(long, global = true, default_value = "runs/latest")]
    out: PathBuf,
    /// Worker threads; 1 runs everything sequentially, 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed for randomised checks, recorded in the manifest.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem and write the solution and solver diagnostics.
    Solve,
    /// Solve, then estimate radial limits at the corner and classify them.
    Radial,
    /// Solve, then run the barrier sandwich check of the [sandwich] section.
    Sandwich,
    /// Run every grid point of a sweep and aggregate the classifications.
    Sweep {
        /// Sweep file with `axes`; defaults to the [sweep] section of the problem.
        #[arg(long)]
        sweep: Option<PathBuf>,
    },
    /// Check the corner conditions for given angles (or those of --config).
    Conditions {
        #[arg(long, value_parser = angle)]
        alpha: Option<f64>,
        #[arg(long, value_parser = angle)]
        gamma2: Option<f64>,
        #[arg(long, value_parser = angle)]
        lambda1: Option<f64>,
        #[arg(long, value_parser = angle)]
        lambda2: Option<f64>,
        /// Contact angle on the plus side, for the Concus-Finn check.
        #[arg(long, value_parser = angle)]
        gamma1: Option<f64>,
    },
    /// Torus barrier checks.
    Barriers {
        #[command(subcommand)]
        command: BarrierCommand,
    },
}

#[derive(Subcommand)]
enum BarrierCommand {
    /// Compares the numerical divergence of the barrier's flux with its exact
    /// value on a grid over the footprint.
    Audit {
        /// Bound on |H|; the minor radius is chosen from it.
        #[arg(long)]
        m2: f64,
        #[arg(long, value_enum, default_value_t = SheetArg::Plus)]
        sheet: SheetArg,
        /// Grid points per axis.
        #[arg(long, default_value_t = 201)]
        n: usize,
        /// Random points for the parametric-versus-graph check.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SheetArg {
    Plus,
    Minus,
}

fn angle(s: &str) -> Result<f64, String> {
    parse_angle(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn require_config(cli: &Cli) -> Result<&Path, Failure> {
    cli.config.as_deref().ok_or_else(|| Failure::Validation(anyhow!("--config is required for this command")))
}

fn run(cli: Cli) -> Result<i32, Failure> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::Validation(anyhow!("thread pool: {e}")))?;
    }
    let exec = if cli.threads == 1 { Exec::Sequential } else { Exec::Parallel };
    let ctx = RunContext { seed: cli.seed, threads: rayon::current_num_threads(), exec };

    match &cli.command {
        Command::Solve | Command::Radial | Command::Sandwich => {
            let (name, stages) = match cli.command {
                Command::Solve => ("solve", Stages { radial: false, sandwich: false }),
                Command::Radial => ("radial", Stages { radial: true, sandwich: false }),
                _ => ("sandwich", Stages { radial: false, sandwich: true }),
            };
            let summary = pipeline::run_solve(require_config(&cli)?, &cli.out, name, stages, ctx)?;
            if !summary.label.is_empty() {
                println!("classification: {}", summary.label);
            }
            if let Some(v) = summary.sandwich_valid {
                println!("sandwich: {}", if v { "valid" } else { "violated" });
            }
            println!("artifacts: {}", cli.out.display());
            Ok(0)
        }
        Command::Sweep { sweep } => {
            let results = pipeline::run_sweep(require_config(&cli)?, sweep.as_deref(), &cli.out, ctx)?;
            let code = results.iter().filter_map(|r| r.as_ref().err()).map(Failure::exit_code).max().unwrap_or(0);
            for e in results.iter().filter_map(|r| r.as_ref().err()) {
                eprintln!("sub-run failed: {e}");
            }
            println!("{} points, aggregate: {}", results.len(), cli.out.join("aggregate.csv").display());
            Ok(code)
        }
        Command::Conditions { alpha, gamma2, lambda1, lambda2, gamma1 } => {
            let from_file = match &cli.config {
                Some(p) => Some(pipeline::read_config(p)?.1),
                None => None,
            };
            let alpha = alpha
                .or(from_file.as_ref().map(|c| c.domain.alpha()))
                .ok_or_else(|| Failure::Validation(anyhow!("missing `alpha` (pass --alpha or --config)")))?;
            let file_conditions = from_file.as_ref().and_then(|c| c.conditions.as_ref());
            let gamma2 = gamma2
                .or(file_conditions.map(|c| c.gamma2))
                .ok_or_else(|| Failure::Validation(anyhow!("missing `gamma2` (pass --gamma2 or a [conditions] section)")))?;
            let lambdas = match (lambda1.or(file_conditions.and_then(|c| c.lambda1)), lambda2.or(file_conditions.and_then(|c| c.lambda2))) {
                (Some(a), Some(b)) => Some((a, b)),
                (None, None) => None,
                _ => return Err(Failure::Validation(anyhow!("`lambda1` and `lambda2` must be given together"))),
            };
            let mut report = match lambdas {
                Some((l1, l2)) => check_theorem2(alpha, gamma2, l1, l2),
                None => check_theorem1(alpha, gamma2),
            };
            if let Some(g1) = gamma1 {
                report.concus_finn = Some(concus_finn_admissible(alpha, *g1, gamma2));
            }
            report.chosen = choose_comparison_angles(alpha, gamma2, lambdas, AngleStrategy::Midpoint).ok();
            let text = report.to_text();
            print!("{text}");
            let mut run = RunDir::create(&cli.out, "conditions", &text, cli.seed, ctx.threads).map_err(Failure::Validation)?;
            run.write("conditions.txt", &text).map_err(Failure::Validation)?;
            run.finish("ok").map_err(Failure::Validation)?;
            Ok(report.verdict().exit_code())
        }
        Command::Barriers { command: BarrierCommand::Audit { m2, sheet, n, samples } } => {
            let r0 = minor_radius(*m2).map_err(|e| Failure::Validation(e.into()))?;
            let sheet = match sheet {
                SheetArg::Plus => Sheet::Plus,
                SheetArg::Minus => Sheet::Minus,
            };
            let barrier = TorusBarrier::canonical(sheet, r0);
            let audit = mean_curvature_audit(&barrier, AuditGrid::new(*n, r0), exec).map_err(|e| Failure::Validation(e.into()))?;
            let certification = graph_certification(r0, *samples, cli.seed).map_err(|e| Failure::Numerical(e.into()))?;
            let summary = format!(
                "m2 = {m2:.17e}\nr0 = {r0:.17e}\npoints = {}\nmin_div = {:.17e}\nmax_div = {:.17e}\nmax_error = {:.17e}\ngraph_samples = {samples}\ngraph_max_deviation = {certification:.17e}\n",
                audit.rows.len(),
                audit.min_div,
                audit.max_div,
                audit.max_error
            );
            print!("{summary}");
            let config = format!("m2 = {m2}\nn = {n}\nsamples = {samples}\n");
            let mut run = RunDir::create(&cli.out, "barriers audit", &config, cli.seed, ctx.threads).map_err(Failure::Validation)?;
            run.write("audit.csv", &audit.to_csv()).map_err(Failure::Validation)?;
            run.write("audit.toml", &summary).map_err(Failure::Validation)?;
            run.finish("ok").map_err(Failure::Validation)?;
            Ok(0)
        }
    }
}

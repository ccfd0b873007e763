//! `topoflow` — phase-field topology optimization of Stokes–Brinkman flow
//! on adaptively refined triangular meshes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use topoflow::adapt::{afem_drive, AfemConfig, RunReport};
use topoflow::manufactured::{convergence_study, fit_rate};
use topoflow::problem::ProblemSpec;
use topoflow_cli::compare::{compare_mode, uniform_arm};
use topoflow_cli::config::{load_config, validate_afem};
use topoflow_cli::csvlog::write_csv_log;
use topoflow_cli::presets::preset;
use topoflow_cli::vtk::write_vtk;
use topoflow_cli::CliError;

#[derive(Parser)]
#[command(
    name = "topoflow",
    about = "Phase-field topology optimization of Stokes-Brinkman flow with adaptive meshing",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one optimization (adaptive by default).
    Run(RunArgs),
    /// Run the adaptive and uniform arms and print the comparison table.
    Compare(RunArgs),
    /// Solve a problem with a known closed-form answer on a uniform mesh
    /// hierarchy and check the convergence rates.
    Verify {
        /// Refinement levels in the study.
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Benchmark preset: left_inflow, three_inflows, or bypass.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Config file (key = value lines; see README).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write CSV history and VTK fields (created if missing).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Seed for a random initial design.
    #[arg(long)]
    seed: Option<u64>,
    /// Mesh levels (initial mesh counts as level 0).
    #[arg(long)]
    levels: Option<usize>,
    /// adaptive | uniform.
    #[arg(long)]
    strategy: Option<String>,
}

fn resolve(args: &RunArgs) -> Result<(ProblemSpec, AfemConfig), CliError> {
    let (spec, mut cfg) = match (&args.preset, &args.config) {
        (Some(name), None) => (preset(name)?, AfemConfig::default()),
        (None, Some(path)) => load_config(path)?,
        (None, None) => {
            return Err(CliError::Invalid("one of --preset or --config is required".into()))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --preset with --config"),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(levels) = args.levels {
        cfg.levels = levels;
    }
    if let Some(strategy) = &args.strategy {
        cfg.strategy = strategy.parse().map_err(CliError::Invalid)?;
    }
    validate_afem(&cfg).map_err(CliError::Invalid)?;
    Ok((spec, cfg))
}

fn write_outputs(
    report: &RunReport,
    spec: &ProblemSpec,
    cfg: &AfemConfig,
    out_dir: &Path,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    let stem = format!("{}_{}", spec.name, cfg.strategy);
    write_csv_log(&report.history, &out_dir.join(format!("{stem}.csv")))?;
    write_vtk(
        &report.mesh,
        &report.phi,
        &report.u,
        &report.p,
        &report.indicators,
        &out_dir.join(format!("{stem}.vtk")),
    )?;
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let (spec, cfg) = resolve(args)?;
    let report = afem_drive(&spec, &cfg)?;
    for l in &report.levels {
        let band = l
            .marked_band_fraction
            .map(|b| format!(", {:.0}% of marks in the interface band", 100.0 * b))
            .unwrap_or_default();
        println!(
            "level {}: {} vertices, objective {:.4}, eta1 {:.3e}, eta2 {:.3e}, marked {}/{}{}, {:.1}s",
            l.level,
            l.n_vertices,
            l.objective.total(),
            l.eta1,
            l.eta2,
            l.marked,
            l.n_elements,
            band,
            l.seconds
        );
    }
    let last = report.levels.last().expect("non-empty run");
    println!(
        "final: objective {:.4} on {} vertices, |volume gap| {:.2e}",
        last.objective.total(),
        last.n_vertices,
        last.volume_gap.abs()
    );
    if let Some(dir) = &args.out_dir {
        write_outputs(&report, &spec, &cfg, dir)?;
        println!("wrote {}/{}_{}.{{csv,vtk}}", dir.display(), spec.name, cfg.strategy);
    }
    Ok(())
}

fn cmd_compare(args: &RunArgs) -> Result<(), CliError> {
    let (spec, cfg) = resolve(args)?;
    let uniform_cfg = uniform_arm(&cfg);
    let comparison = compare_mode(&spec, &cfg, &uniform_cfg)?;
    print!("{}", comparison.table());
    if let Some(dir) = &args.out_dir {
        write_outputs(&comparison.adaptive, &spec, &cfg, dir)?;
        write_outputs(&comparison.uniform, &spec, &uniform_cfg, dir)?;
        std::fs::write(dir.join(format!("{}_compare.txt", spec.name)), comparison.table())?;
    }
    Ok(())
}

fn cmd_verify(levels: usize) -> Result<(), CliError> {
    let rows = convergence_study(4, levels)?;
    println!(
        "{:>10} {:>12} {:>14} {:>14} {:>14}",
        "vertices", "h", "energy_error", "l2_error", "eta2"
    );
    for r in &rows {
        println!(
            "{:>10} {:>12.5e} {:>14.6e} {:>14.6e} {:>14.6e}",
            r.n_vertices, r.h, r.energy_error, r.l2_error, r.eta2
        );
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let rate = |f: fn(&topoflow::manufactured::ConvergenceRow) -> f64| {
        fit_rate(&h, &rows.iter().map(f).collect::<Vec<_>>())
    };
    let (re, rl, r2) = (
        rate(|r| r.energy_error),
        rate(|r| r.l2_error),
        rate(|r| r.eta2),
    );
    println!("rates: energy {re:.3} (want 1.0±0.15), L² {rl:.3} (want 2.0±0.15), eta2 {r2:.3} (want 1.0±0.2)");
    let ok = (re - 1.0).abs() <= 0.15 && (rl - 2.0).abs() <= 0.15 && (r2 - 1.0).abs() <= 0.2;
    if ok {
        println!("verify: PASS");
        Ok(())
    } else {
        Err(CliError::Invalid("convergence rates outside tolerance".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Compare(args) => cmd_compare(args),
        Cmd::Verify { levels } => cmd_verify(*levels),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! `lagnet` — run constrained-dynamics learning experiments and the
//! invariant verification suite.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure (or a
//! failed verification check).

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lagnet::bp::limit_comparison;
use lagnet::dynamics::{action_eval, integrate, make_initial_state};
use lagnet::presets::ExperimentKind;

#[derive(Parser)]
#[command(name = "lagnet", version, about = "Constrained-dynamics learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or custom experiment from a config file.
    Run {
        /// Path to the TOML experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Integrator step override.
        #[arg(long)]
        dt: Option<f64>,
        /// Horizon override.
        #[arg(long)]
        horizon: Option<f64>,
        /// Constraint-penalty coefficient override.
        #[arg(long)]
        penalty: Option<f64>,
        /// Output directory (default: config [output].dir, then
        /// $LAGNET_OUT_DIR, then the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite and print a pass/fail table.
    Verify {
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Numerical failures exit with 2, everything else with 1.
fn is_numerical(err: &anyhow::Error) -> bool {
    matches!(
        err.downcast_ref::<lagnet::Error>(),
        Some(
            lagnet::Error::IndefiniteGram
                | lagnet::Error::SingularTriangular { .. }
                | lagnet::Error::NonFiniteState { .. }
                | lagnet::Error::ConstraintDrift { .. }
        )
    )
}

fn run_command(config_path: &Path, overrides: config::Overrides, out: Option<PathBuf>) -> Result<()> {
    let cfg = config::load(config_path)?;
    let base_dir = config_path.parent().unwrap_or(Path::new("."));
    let exp = config::resolve(&cfg, base_dir, overrides)?;

    let out_dir = out
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os("LAGNET_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;

    match &exp.kind {
        ExperimentKind::Trajectory => {
            let state0 = make_initial_state(&exp.net, &exp.initial_weights, exp.input.as_ref())?;
            let trajectory = integrate(
                &state0,
                &exp.net,
                exp.input.as_ref(),
                exp.target.as_ref(),
                &exp.params,
                exp.stride,
            )?;
            let action = action_eval(&trajectory, &exp.params);

            let csv_path = out_dir.join("trajectory.csv");
            let summary_path = out_dir.join("summary.txt");
            output::write_trajectory_csv(&csv_path, &exp.net, &trajectory)?;
            output::write_run_summary(&summary_path, &exp, &trajectory, &action)?;

            println!(
                "{}: {} steps, max|g| = {:.3e}, wrote {} and {}",
                exp.name,
                trajectory.steps,
                trajectory.max_constraint_residual,
                csv_path.display(),
                summary_path.display()
            );
        }
        ExperimentKind::LimitSweep { gamma, mass_pairs, options, schedule } => {
            let rows =
                limit_comparison(&exp.net, schedule, exp.target.as_ref(), *gamma, mass_pairs, options);
            let csv_path = out_dir.join("limit_table.csv");
            let summary_path = out_dir.join("summary.txt");
            output::write_limit_csv(&csv_path, &rows)?;
            output::write_limit_summary(&summary_path, &exp, *gamma, &rows)?;

            println!("{}: {} mass pairs", exp.name, rows.len());
            for r in &rows {
                match &r.failure {
                    None => println!(
                        "  m_w = {:9.3e}  lambda_dev = {:.3e}  wdot_dev = {:.3e}  velocity_form_dev = {:.3e}",
                        r.m_w, r.lambda_dev, r.wdot_dev, r.velocity_form_dev
                    ),
                    Some(f) => println!("  m_w = {:9.3e}  FAILED: {f}", r.m_w),
                }
            }
            println!("wrote {} and {}", csv_path.display(), summary_path.display());
        }
    }
    Ok(())
}

fn verify_command(seed: u64) -> Result<bool> {
    println!("verification suite (seed {seed})");
    let reports = lagnet::verify::run_all(seed);
    let mut all_passed = true;
    for r in &reports {
        println!("  [{}] {} — {}", if r.passed { "pass" } else { "FAIL" }, r.name, r.detail);
        all_passed &= r.passed;
    }
    println!("{}", if all_passed { "all checks passed" } else { "verification FAILED" });
    Ok(all_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, dt, horizon, penalty, out } => {
            let overrides = config::Overrides { dt, horizon, penalty };
            match run_command(&config, overrides, out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(if is_numerical(&e) { 2 } else { 1 })
                }
            }
        }
        Command::Verify { seed } => match verify_command(seed) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(2),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}

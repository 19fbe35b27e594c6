//! `mfw`: experiment runner for Frank-Wolfe recursions on probability
//! measures. Subcommands: `solve` (one run, trace artifacts), `sweep`
//! (replication fan-out with a summary), `check` (requested verification
//! checks plus run artifacts), `clt` (central-limit experiment), `audit`
//! (Monte Carlo oracle audit).
//!
//! Exit codes: 0 success / all checks pass; 1 check failure or runtime
//! error; 2 configuration error; 3 capability mismatch. The worker count for
//! replication fan-out comes from the `MFW_WORKERS` environment variable.

mod audit;
mod checks;
mod clt;
mod config;
mod csvio;
mod error;
mod report;
mod runner;
mod stats;

use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mfw", version, about = "Frank-Wolfe experiments over probability measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured replication count.
    #[arg(long)]
    replications: Option<u64>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
    /// Fill the elapsed_ms column (artifacts are then not byte-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one replication and write trace, measure, and report files.
    Solve(RunArgs),
    /// Run all replications in parallel and write traces plus a summary.
    Sweep(RunArgs),
    /// Run replications, then evaluate the configured checks.
    Check(RunArgs),
    /// Central-limit experiment on the estimated objective values.
    Clt(RunArgs),
    /// Monte Carlo oracle audit.
    Audit(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Check(args) => cmd_check(args),
        Command::Clt(args) => cmd_clt(args),
        Command::Audit(args) => cmd_audit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = config::load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.solver.seed = seed;
    }
    if let Some(reps) = args.replications {
        cfg.replications = reps;
        if reps == 0 {
            return Err(CliError::parse("replications must be >= 1"));
        }
        if cfg.checks.iter().any(|c| c.is_statistical()) && reps < 30 {
            return Err(CliError::parse(
                "statistical checks (bound_sfw, gap_nonconvex, clt) require replications >= 30",
            ));
        }
    }
    Ok(cfg)
}

fn header(cfg: &ExperimentConfig, command: &str, reps: u64) -> Vec<(String, String)> {
    vec![
        ("command".into(), command.into()),
        ("instance".into(), cfg.instance_name.clone()),
        ("variant".into(), cfg.solver.variant.as_str().into()),
        ("max_iters".into(), cfg.solver.max_iters.to_string()),
        ("seed".into(), cfg.solver.seed.to_string()),
        ("replications".into(), reps.to_string()),
        (
            "degenerate_oracle".into(),
            cfg.degenerate_oracle.to_string(),
        ),
    ]
}

fn cmd_solve(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let trace = runner::solve_one(&cfg.instance, &cfg.mu0, &cfg.solver, 0)?;
    csvio::atomic_write(&args.out.join("trace.csv"), &csvio::trace_csv(&trace, args.timing))?;
    csvio::atomic_write(
        &args.out.join("measure.csv"),
        &csvio::measure_csv(&trace.final_measure),
    )?;
    let mut hdr = header(&cfg, "solve", 1);
    let last = trace.rows.last().expect("trace is never empty");
    hdr.push(("final_objective".into(), last.objective.to_string()));
    if let Some(gap) = last.obj_gap {
        hdr.push(("final_obj_gap".into(), gap.to_string()));
        hdr.push(("rate".into(), checks::describe_rate(&trace.gap_series())));
    }
    if let Some(worst) = trace.audit_worst {
        hdr.push(("audit_worst_suboptimality".into(), worst.to_string()));
    }
    csvio::atomic_write(&args.out.join("report.txt"), &report::render_report(&hdr, &[]))?;
    if !args.quiet {
        eprintln!(
            "solve: {} rows, final objective {}",
            trace.rows.len(),
            last.objective
        );
    }
    Ok(())
}

fn run_and_dump_replications(
    args: &RunArgs,
    cfg: &ExperimentConfig,
) -> Result<Vec<measure_fw::Trace>, CliError> {
    let traces = runner::run_replications(cfg, &cfg.solver, cfg.replications)?;
    for trace in &traces {
        csvio::atomic_write(
            &args.out.join(format!("trace_rep{:04}.csv", trace.rep)),
            &csvio::trace_csv(trace, args.timing),
        )?;
        csvio::atomic_write(
            &args.out.join(format!("measure_rep{:04}.csv", trace.rep)),
            &csvio::measure_csv(&trace.final_measure),
        )?;
    }
    csvio::atomic_write(&args.out.join("summary.csv"), &csvio::summary_csv(&traces))?;
    Ok(traces)
}

fn cmd_sweep(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let traces = run_and_dump_replications(args, &cfg)?;
    let mut hdr = header(&cfg, "sweep", cfg.replications);
    let mean_gaps: Vec<(usize, f64)> = (0..traces[0].rows.len())
        .filter_map(|k| {
            let gaps: Vec<f64> = traces.iter().filter_map(|t| t.rows[k].obj_gap).collect();
            if gaps.len() == traces.len() {
                Some((traces[0].rows[k].k, stats::mean(&gaps)))
            } else {
                None
            }
        })
        .collect();
    if !mean_gaps.is_empty() {
        hdr.push(("rate".into(), checks::describe_rate(&mean_gaps)));
    }
    csvio::atomic_write(&args.out.join("report.txt"), &report::render_report(&hdr, &[]))?;
    if !args.quiet {
        eprintln!("sweep: {} replications written", traces.len());
    }
    Ok(())
}

fn cmd_check(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    if cfg.checks.is_empty() {
        return Err(CliError::parse("no checks configured in [experiment]"));
    }
    let traces = run_and_dump_replications(args, &cfg)?;
    let mut outcomes = Vec::new();
    for check in &cfg.checks {
        if !args.quiet {
            eprintln!("running check {}", check.name());
        }
        outcomes.push(checks::run_check(*check, &cfg, Some(&traces))?);
    }
    let hdr = header(&cfg, "check", cfg.replications);
    let text = report::render_report(&hdr, &outcomes);
    csvio::atomic_write(&args.out.join("report.txt"), &text)?;
    if !args.quiet {
        eprint!("{text}");
    }
    if outcomes.iter().any(|o| o.status == report::Status::Fail) {
        return Err(CliError::CheckFailed(
            "one or more checks failed; see report.txt".into(),
        ));
    }
    Ok(())
}

fn cmd_clt(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    if cfg.replications < 30 {
        return Err(CliError::parse(
            "the CLT experiment requires replications >= 30",
        ));
    }
    let report_data = clt::clt_experiment(&cfg)?;
    csvio::atomic_write(&args.out.join("clt_report.txt"), &report_data.render())?;
    csvio::atomic_write(&args.out.join("clt.csv"), &report_data.csv())?;
    if !args.quiet {
        eprint!("{}", report_data.render());
    }
    if report_data.pass() {
        Ok(())
    } else {
        Err(CliError::CheckFailed("CLT experiment failed".into()))
    }
}

fn cmd_audit(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let report_data = audit::oracle_audit(&cfg)?;
    csvio::atomic_write(&args.out.join("audit_report.txt"), &report_data.render())?;
    if !args.quiet {
        eprint!("{}", report_data.render());
    }
    if report_data.pass() {
        Ok(())
    } else {
        Err(CliError::CheckFailed("oracle audit failed".into()))
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use delaylab_core::analysis::Verdict;
use delaylab_core::scenario::{self, ScenarioConfig, SweepParam};
use delaylab_core::{Error, StabilityReport};

/// Exit status for command-line usage errors.
const EXIT_USAGE: u8 = 64;
/// Exit status of `check` when the margin is not positive everywhere.
const EXIT_NOT_CERTIFIED: u8 = 20;

#[derive(Debug, Parser)]
#[command(
    name = "delaylab",
    version,
    about = "Simulate and analyse delayed rate-control scenarios"
)]
struct Cli {
    /// Override the integration step (seconds).
    #[arg(long, global = true)]
    step: Option<f64>,

    /// Override the simulated horizon (seconds).
    #[arg(long = "t-end", global = true)]
    t_end: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario, analyse it and write the output files.
    Run {
        scenario: PathBuf,
        /// Output directory (default: `[output] dir` of the scenario).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        scenario: PathBuf,
        /// One of a, b, kappa, tau, T_delay, intercept, slope.
        #[arg(long)]
        param: String,
        /// Comma-separated list or inclusive range `lo:hi:step`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the stability margin only, without simulating.
    Check { scenario: PathBuf },
}

fn load(cli: &Cli, path: &Path) -> delaylab_core::Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(step) = cli.step {
        cfg = cfg.with_step(step)?;
    }
    if let Some(t_end) = cli.t_end {
        cfg.t_end = t_end;
    }
    cfg.validated()
}

fn print_stability(report: &StabilityReport) {
    let eq = &report.equilibrium;
    println!(
        "equilibrium     x* = {:.10}  c* = {:.10}",
        eq.x_star, eq.c_star
    );
    for v in &report.assumption_violations {
        println!("assumption      {v}");
    }
    println!(
        "margin range    [{:.6}, {:.6}] on {} points",
        report.range.0, report.range.1, report.grid_n
    );
    println!(
        "min margin      {:.6e} at x = {:.6}",
        report.min_margin, report.argmin
    );
    println!("verdict         {}", report.verdict);
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Run {
            scenario: path,
            out,
        } => {
            let mut cfg = load(cli, path)?;
            if let Some(dir) = out {
                cfg = cfg.with_out_dir(dir);
            }
            let (outcome, files) = scenario::run_scenario(&cfg)?;
            if let Some(snap) = outcome.config.step_snap {
                println!(
                    "step            {} (snapped from {})",
                    snap.applied, snap.requested
                );
            }
            print_stability(&outcome.report);
            let c = &outcome.classification;
            println!("classification  {}", c.kind);
            println!("final error     {:.6e}", c.final_error);
            println!("tail p2p        {:.6e}", c.tail_peak_to_peak);
            for f in files {
                println!("wrote           {}", f.display());
            }
            Ok(outcome.exit_code() as u8)
        }
        Command::Sweep {
            scenario: path,
            param,
            values,
            out,
        } => {
            let cfg = load(cli, path)?;
            let param: SweepParam = param.parse()?;
            let values = scenario::parse_values(values)?;
            let report = scenario::sweep(&cfg, param, &values);
            let dir = out.clone().unwrap_or_else(|| cfg.out_dir.clone());
            let csv = scenario::write_sweep(&report, &dir)?;

            for row in &report.rows {
                match &row.error {
                    None => println!(
                        "{param} = {:<10} {:<16} {:<12} min margin {:.4e}",
                        row.value,
                        row.verdict.map(|v| v.to_string()).unwrap_or_default(),
                        row.classification
                            .map(|c| c.to_string())
                            .unwrap_or_default(),
                        row.min_margin.unwrap_or(f64::NAN),
                    ),
                    Some(msg) => println!("{param} = {:<10} error: {msg}", row.value),
                }
            }
            let show = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
            println!("largest certified    {}", show(report.largest_certified));
            println!("smallest oscillating {}", show(report.smallest_oscillating));
            if let Some((lo, hi)) = report.certification_bracket {
                println!("certification lost between {lo} and {hi}");
            }
            for flag in &report.monotonicity_flags {
                println!("warning: {flag}");
            }
            println!("wrote {}", csv.display());
            Ok(0)
        }
        Command::Check { scenario: path } => {
            let cfg = load(cli, path)?;
            let report = scenario::check_scenario(&cfg)?;
            print_stability(&report);
            Ok(match report.verdict {
                Verdict::CertifiedStable => 0,
                Verdict::NotCertified => EXIT_NOT_CERTIFIED,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            let code = err
                .chain()
                .find_map(|e| e.downcast_ref::<Error>())
                .map_or(70, |e| e.exit_code());
            ExitCode::from(code as u8)
        }
    }
}

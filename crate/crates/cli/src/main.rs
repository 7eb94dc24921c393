use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phasefrac::params::parse_config;
use phasefrac::simulation::{self, RunOptions, VerifyOptions};
use phasefrac::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "phasefrac", version, about = "Phase-field simulation of pressurized, cooled cracks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the number of time steps.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Compare simulated crack openings with the closed-form solution.
    Verify {
        #[arg(long)]
        case: String,
        /// Level range `L1:L2`, both inclusive.
        #[arg(long)]
        levels: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Write the closed-form maximum aperture series.
    Analytic {
        #[arg(long)]
        case: String,
        /// End time in seconds.
        #[arg(long)]
        t_end: f64,
        /// Number of intervals between 0 and the end time.
        #[arg(long, default_value_t = 365)]
        samples: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::ParameterDomain(_) | Error::Geometry(_) | Error::Invalid(_) => EXIT_CONFIG,
        Error::Io { .. } => 1,
        Error::NewtonFailure { .. } | Error::LinearSolve { .. } | Error::DegenerateCell { .. } => EXIT_SOLVER,
    }
}

fn parse_levels(s: &str) -> Option<(u32, u32)> {
    let (a, b) = s.split_once(':')?;
    let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (a <= b).then_some((a, b))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, steps, threads } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let cfg = match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let opts = RunOptions { out: Some(out), steps, write_vtk: true };
            match simulation::with_threads(threads, || simulation::run::<f64>(cfg, &opts)).and_then(|r| r) {
                Ok(summary) => {
                    println!("completed {} steps", summary.outcomes.len());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code(&e))
                }
            }
        }
        Command::Verify { case, levels, out, threads } => {
            if !["a", "b", "c"].contains(&case.as_str()) {
                eprintln!("error: unknown case `{case}` (expected a, b or c)");
                return ExitCode::from(EXIT_CONFIG);
            }
            let Some((l1, l2)) = parse_levels(&levels) else {
                eprintln!("error: --levels expects L1:L2 with L1 <= L2, got `{levels}`");
                return ExitCode::from(EXIT_CONFIG);
            };
            let opts = VerifyOptions::default();
            let result = simulation::with_threads(threads, || simulation::verify(&case, l1..=l2, &opts)).and_then(|r| r);
            let result = match result {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(exit_code(&e));
                }
            };
            let written = std::fs::create_dir_all(&out)
                .map_err(|e| Error::Io { path: out.clone(), source: e })
                .and_then(|_| simulation::write_verify_csv(&out.join("verify.csv"), &result.rows))
                .and_then(|_| {
                    if result.series.is_empty() {
                        Ok(())
                    } else {
                        simulation::write_series_csv(&out.join("verify_series.csv"), &result.series)
                    }
                });
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            for r in &result.rows {
                println!(
                    "level {} h={:.4} max_cod_num={:.6e} max_cod_ana={:.6e} rel_err={:.4} l2={:.4}",
                    r.level, r.h, r.max_cod_num, r.max_cod_ana, r.rel_err, r.l2_profile_err
                );
            }
            for m in &result.messages {
                eprintln!("{m}");
            }
            if result.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Analytic { case, t_end, samples, out } => {
            if !(t_end >= 0.0) || samples == 0 {
                eprintln!("error: --t-end must be non-negative and --samples positive");
                return ExitCode::from(EXIT_CONFIG);
            }
            let times: Vec<f64> = (0..=samples).map(|k| t_end * k as f64 / samples as f64).collect();
            let series = match simulation::analytic_series(&case, &times) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(exit_code(&e));
                }
            };
            let path = out.join("analytic.csv");
            let res = std::fs::create_dir_all(&out)
                .map_err(|e| Error::Io { path: out.clone(), source: e })
                .and_then(|_| simulation::write_analytic_csv(&path, &series));
            match res {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

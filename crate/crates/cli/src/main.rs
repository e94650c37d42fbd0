use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{ensure, Context, Result};
use clap::{Parser, Subcommand};
use spr_kinetics::cases;
use spr_kinetics::oracle;
use spr_kinetics::Execution;
use spr_kinetics_cli::config::ExperimentConfig;
use spr_kinetics_cli::experiment::{self, RunOptions};

#[derive(Debug, Parser)]
#[command(
    name = "spr-kinetics",
    version,
    about = "Simulate quantum-probed SPR binding-kinetics estimation"
)]
struct Cli {
    /// Worker threads for ensembles (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment sweep and write CSV results plus a manifest.
    Run {
        /// Experiment config, or a manifest.json from an earlier run.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Use p = 1500 sets per ensemble.
        #[arg(long)]
        paper_fidelity: bool,
        /// Exit successfully even when an ensemble had too many failed fits.
        #[arg(long)]
        allow_unreliable: bool,
    },
    /// Print a built-in case study as JSON.
    Case { name: String },
    /// Check the closed-form photon statistics against the Fock-basis oracle.
    Verify {
        #[arg(long, default_value_t = 60)]
        cutoff: usize,
        #[arg(long, default_value_t = 50)]
        tuples: usize,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Write the noise-free sensorgram of a case as CSV.
    Sensorgram {
        name: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn sensorgram_csv(name: &str, sink: impl Write) -> Result<()> {
    let case = cases::resolve_case(name)?;
    let ideal = case.ideal()?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["t", "theta_deg", "n_a", "T", "T_L"])?;
    for (p, (_, t_l)) in ideal.points.iter().zip(&ideal.linearized) {
        w.write_record([
            p.t.to_string(),
            p.theta_deg.to_string(),
            p.n_a.to_string(),
            p.transmittance.to_string(),
            t_l.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            paper_fidelity,
            allow_unreliable,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("cannot read {}", config.display()))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            let summary = experiment::run_experiment(
                &cfg,
                &RunOptions {
                    out_dir: out,
                    seed,
                    paper_fidelity,
                },
            )?;
            println!(
                "wrote {} result rows to {}",
                summary.rows,
                summary.output_dir.display()
            );
            if summary.unreliable.is_empty() {
                return Ok(ExitCode::SUCCESS);
            }
            for line in &summary.unreliable {
                eprintln!("unreliable ensemble: {line}");
            }
            if allow_unreliable {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("error: signal-to-noise too low for reliable fits (pass --allow-unreliable to accept)");
                Ok(ExitCode::from(3))
            }
        }
        Command::Case { name } => {
            let case = cases::resolve_case(&name)?;
            println!("{}", serde_json::to_string_pretty(&case)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            cutoff,
            tuples,
            tolerance,
            seed,
        } => {
            ensure!(tuples > 0, "--tuples must be at least 1");
            ensure!(tolerance > 0.0, "--tolerance must be positive");
            let report = match oracle::verify_closed_forms(
                cutoff,
                tuples,
                seed,
                tolerance,
                Execution::Parallel,
            ) {
                Ok(report) => report,
                Err(err @ spr_kinetics::Error::TruncationTail { .. })
                | Err(err @ spr_kinetics::Error::TruncationConvergence { .. }) => {
                    eprintln!("tolerance breach at cutoff {cutoff}: {err}");
                    return Ok(ExitCode::from(2));
                }
                Err(err) => return Err(err.into()),
            };
            println!("kind  max_rel_delta_m  max_rel_mean_m  max_tail_mass  tuples");
            for k in &report.kinds {
                println!(
                    "{:<5} {:<16.3e} {:<15.3e} {:<14.3e} {}",
                    k.kind.label(),
                    k.max_rel_delta_m,
                    k.max_rel_mean_m,
                    k.max_tail_mass,
                    k.tuples
                );
            }
            if report.passed() {
                println!("all state kinds within {tolerance:e}");
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("tolerance breach: deviation above {tolerance:e}");
                Ok(ExitCode::from(2))
            }
        }
        Command::Sensorgram { name, out } => {
            match out {
                Some(path) => {
                    let file = fs::File::create(&path)
                        .with_context(|| format!("cannot create {}", path.display()))?;
                    sensorgram_csv(&name, file)?;
                }
                None => sensorgram_csv(&name, io::stdout().lock())?,
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// A downstream reader closing the pipe (`| head`) is not a failure.
fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        let io_err = cause.downcast_ref::<io::Error>().or_else(|| {
            match cause.downcast_ref::<csv::Error>()?.kind() {
                csv::ErrorKind::Io(e) => Some(e),
                _ => None,
            }
        });
        io_err.is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

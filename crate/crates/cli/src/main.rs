use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mixfujita::harness::{self, exit_code, ExperimentConfig};
use mixfujita::Result;

#[derive(Parser)]
#[command(name = "mixfujita", version, about = "Mixed local-nonlocal Fujita problems: kernels, certificates, simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Io {
    /// TOML experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write trace.csv.
    Simulate(Io),
    /// Certify kernel identities and bounds for (operator.s, grid.dim).
    Kernel(Io),
    /// Evaluate the global and nonglobal certificates for the configured datum.
    Criteria(Io),
    /// Run the (p, amplitude) sweep and estimate the critical exponent.
    Sweep {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(io) => {
            let cfg = ExperimentConfig::load(&io.config)?;
            let out = harness::simulate(&cfg, &io.out)?;
            println!("outcome: {:?}", out.status);
            println!("steps: {} (rejected {})", out.steps, out.rejected_steps);
            if let Some(t) = out.monitor.as_ref().and_then(|m| m.crossing_time()) {
                println!("margin crossing time: {t:.6}");
            }
        }
        Command::Kernel(io) => {
            let cfg = ExperimentConfig::load(&io.config)?;
            let report = harness::kernel(&cfg, &io.out)?;
            for c in &report.checks {
                println!(
                    "{:<20} t={:<5} value={:.3e} {} ({:.2}s)",
                    c.check,
                    if c.t.is_nan() { "-".to_string() } else { c.t.to_string() },
                    c.value,
                    if c.pass { "pass" } else { "FAIL" },
                    c.seconds
                );
            }
            println!("total {:.2}s, all pass: {}", report.seconds, report.all_pass());
        }
        Command::Criteria(io) => {
            let cfg = ExperimentConfig::load(&io.config)?;
            let run = harness::criteria(&cfg, &io.out)?;
            print!("{}", run.report);
            if let Some(r) = &run.supersolution {
                println!("supersolution check: max relative violation {:.3e}", r.max_relative_violation);
            }
        }
        Command::Sweep { io, workers } => {
            let cfg = ExperimentConfig::load(&io.config)?;
            let report = harness::sweep(&cfg, &io.out, workers)?;
            for r in &report.rows {
                println!(
                    "p={:.3} A={:<6} {:<12} {:<16} {}",
                    r.p,
                    r.amplitude_used,
                    r.outcome,
                    r.verdict.map_or("-", |v| v.as_str()),
                    r.error.as_deref().unwrap_or("")
                );
            }
            match report.p_hat {
                Some(p) => println!("p_hat = {p:.3} (critical exponent {:.3})", report.critical_exponent),
                None => println!("p_hat: no bracket ({})", report.notes.join("; ")),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
